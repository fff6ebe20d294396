#include "occugrasp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace occugrasp {

namespace {

constexpr double kSurfaceEps = 1e-5;
constexpr double kNormalStep = 1e-4;
constexpr double kBodySpacing = 0.005;
constexpr double kLabelClearance = 0.005;

bool finite_pose(const GraspPose& p) {
  return all_finite(p.p_g) && p.R_g.allFinite() && std::isfinite(p.width);
}

double angle_between(const Vec3& a, const Vec3& b) { return std::acos(std::clamp(a.dot(b), -1.0, 1.0)); }

}  // namespace

std::array<OrientedBox, 3> gripper_boxes(const GraspPose& pose, const GripperBody& body,
                                         const GraspRegionSpec& spec) {
  const Mat3 R = pose.rotation();
  const double w = pose.width, t = body.finger_thickness, L = spec.d_max - spec.d_min;
  const double depth = pose.depth();
  auto make = [&](const Vec3& local_center, const Vec3& half) {
    return OrientedBox{pose.p_g + R * local_center, R, half};
  };
  return {make(Vec3(-w / 2 - t / 2, 0, depth - L / 2), Vec3(t / 2, t / 2, L / 2)),
          make(Vec3(w / 2 + t / 2, 0, depth - L / 2), Vec3(t / 2, t / 2, L / 2)),
          make(Vec3(0, 0, depth - L - body.palm_depth / 2), Vec3(w / 2 + t, t / 2, body.palm_depth / 2))};
}

std::vector<Vec3> box_samples(const OrientedBox& box, double spacing) {
  int n[3];
  for (int k = 0; k < 3; ++k) n[k] = static_cast<int>(std::ceil(2.0 * box.half[k] / spacing - 1e-9)) + 1;
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  auto coord = [&](int k, int i) {
    return n[k] == 1 ? 0.0 : -box.half[k] + 2.0 * box.half[k] * i / (n[k] - 1);
  };
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i)
        out.push_back(box.center + box.rotation * Vec3(coord(0, i), coord(1, j), coord(2, k)));
  return out;
}

bool box_clear(const SdfScene& scene, const OrientedBox& box, double spacing) {
  // The scene SDF is 1-Lipschitz, so a center farther from all surfaces than
  // the half diagonal certifies every sample at once.
  if (scene_sdf(scene, box.center) > box.half.norm()) return true;
  for (const Vec3& p : box_samples(box, spacing))
    if (!(scene_sdf(scene, p) > 0.0)) return false;
  return true;
}

std::optional<double> march_to_surface(const SdfScene& scene, const Vec3& start, const Vec3& dir,
                                       double max_len) {
  double t = 0.0;
  for (int step = 0; step < 256; ++step) {
    const double s = scene_sdf(scene, start + t * dir);
    if (s < kSurfaceEps) return t;
    t += s;
    if (t > max_len) return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// Runs the checks in cost order; with angle_limit set, stops before the body
// check when the friction test already fails.
OracleDetail evaluate(const SdfScene& scene, const GraspPose& pose, const GripperBody& body,
                      const GraspRegionSpec& spec, std::optional<double> angle_limit) {
  if (!finite_pose(pose)) throw std::invalid_argument("grasp oracle: non-finite pose");
  OracleDetail d;
  const Mat3 R = pose.rotation();
  const Vec3 c = R.col(0), a = R.col(2);
  const double w = pose.width;
  if (!(w > 0.0)) return d;
  const Vec3 g = pose.p_g + pose.depth() * a;
  const Vec3 tip_l = g - 0.5 * w * c, tip_r = g + 0.5 * w * c;
  if (!(scene_sdf(scene, tip_l) > 0.0) || !(scene_sdf(scene, tip_r) > 0.0)) return d;
  const auto t_l = march_to_surface(scene, tip_l, c, w);
  if (!t_l) return d;
  const auto t_r = march_to_surface(scene, tip_r, -c, w);
  if (!t_r) return d;
  const Vec3 n_l = scene_normal(scene, tip_l + *t_l * c, kNormalStep);
  const Vec3 n_r = scene_normal(scene, tip_r - *t_r * c, kNormalStep);
  d.max_contact_angle = std::max(angle_between(n_l, -c), angle_between(n_r, c));
  if (angle_limit && d.max_contact_angle > *angle_limit) return d;
  for (const auto& box : gripper_boxes(pose, body, spec))
    if (!box_clear(scene, box, kBodySpacing)) return d;
  d.geometric_ok = true;
  return d;
}

}  // namespace

OracleDetail oracle_detail(const SdfScene& scene, const GraspPose& pose, const GripperBody& body,
                           const GraspRegionSpec& spec) {
  return evaluate(scene, pose, body, spec, std::nullopt);
}

bool detail_success(const OracleDetail& d, double mu) {
  return d.geometric_ok && d.max_contact_angle <= std::atan(mu);
}

bool grasp_oracle(const SdfScene& scene, const GraspPose& pose, double mu, const GripperBody& body,
                  const GraspRegionSpec& spec) {
  if (!(mu > 0.0)) throw std::invalid_argument("grasp oracle: mu must be > 0");
  return detail_success(evaluate(scene, pose, body, spec, std::atan(mu)), mu);
}

std::optional<double> label_width(const SdfScene& scene, const GraspPose& pose, const GraspRegionSpec& spec) {
  const Mat3 R = pose.rotation();
  const Vec3 c = R.col(0);
  const Vec3 g = pose.p_g + pose.depth() * R.col(2);
  const double r = spec.r;
  if (scene_sdf(scene, g) > r) return std::nullopt;
  const Vec3 lo = g - r * c, hi = g + r * c;
  if (!(scene_sdf(scene, lo) > 0.0) || !(scene_sdf(scene, hi) > 0.0)) return std::nullopt;
  const auto t1 = march_to_surface(scene, lo, c, 2 * r);
  if (!t1) return std::nullopt;
  const auto t2 = march_to_surface(scene, hi, -c, 2 * r);
  if (!t2) return std::nullopt;
  const double reach = std::max(r - *t1, r - *t2);
  return std::min(2.0 * (reach + kLabelClearance), 2.0 * r);
}

}  // namespace occugrasp
