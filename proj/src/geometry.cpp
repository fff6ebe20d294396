#include "occugrasp/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace occugrasp {

double Quaternion::norm() const { return std::sqrt(dot(*this)); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize zero quaternion");
  return {s / n, vx / n, vy / n, vz / n};
}

Mat3 quat_to_matrix(const Quaternion& q) {
  if (!(std::abs(q.norm() - 1.0) <= 1e-6)) {
    throw std::invalid_argument("quat_to_matrix: quaternion is not unit length");
  }
  const double s = q.s, x = q.vx, y = q.vy, z = q.vz;
  Mat3 R;
  R << 1 - 2 * y * y - 2 * z * z, 2 * x * y + 2 * s * z, 2 * x * z - 2 * s * y,
      2 * x * y - 2 * s * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z + 2 * s * x,
      2 * x * z + 2 * s * y, 2 * y * z - 2 * s * x, 1 - 2 * x * x - 2 * y * y;
  return R;
}

Quaternion matrix_to_quat(const Mat3& R) {
  // Eigen builds the Hamilton quaternion of R; our matrix is that of the conjugate.
  Eigen::Quaterniond e(R);
  e.normalize();
  Quaternion q{e.w(), -e.x(), -e.y(), -e.z()};
  if (q.s < 0.0) q = -q;
  return q;
}

FrameSet slerp_frames(const Quaternion& q1, const Quaternion& q2, int K) {
  if (K < 1) throw std::invalid_argument("slerp_frames: K must be >= 1");
  if (std::abs(q1.norm() - 1.0) > 1e-6 || std::abs(q2.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("slerp_frames: endpoints must be unit quaternions");
  }
  const double c = q1.dot(q2);
  if (std::abs(c) >= 1.0 - 1e-9) throw std::invalid_argument("slerp endpoints collinear");
  const double phi = std::acos(c);
  const double sphi = std::sin(phi);

  FrameSet out;
  out.K = K;
  for (int i = 0; i < K; ++i) {
    const double t = static_cast<double>(i) / K;
    const double a = std::sin((1.0 - t) * phi) / sphi;
    const double b = std::sin(t * phi) / sphi;
    Quaternion q{a * q1.s + b * q2.s, a * q1.vx + b * q2.vx, a * q1.vy + b * q2.vy,
                 a * q1.vz + b * q2.vz};
    q = q.normalized();
    out.quaternions.push_back(q);
    out.rotations.push_back(quat_to_matrix(q));
  }
  return out;
}

std::pair<Quaternion, Quaternion> default_endpoints() {
  const double k = 1.0 / std::sqrt(3.0);
  return {Quaternion{1.0, 0.0, 0.0, 0.0}, Quaternion{0.0, k, k, k}};
}

FrameSet default_frames(int K) {
  const auto [q1, q2] = default_endpoints();
  return slerp_frames(q1, q2, K);
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 R;
  R << c, -s, 0, s, c, 0, 0, 0, 1;
  return R;
}

Mat3 frame_from_direction(const Vec3& d) {
  const double n = d.norm();
  if (!(n > 0.0) || !all_finite(d)) throw std::invalid_argument("frame_from_direction: bad direction");
  const Vec3 z = d / n;
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(z[k]) < std::abs(z[axis])) axis = k;
  }
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  const Vec3 x = (e - e.dot(z) * z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return R;
}

std::vector<Vec3> fibonacci_sphere(int n) {
  if (n < 1) throw std::invalid_argument("fibonacci_sphere: n must be >= 1");
  std::vector<Vec3> out;
  out.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * i;
    out.emplace_back(r * std::cos(th), r * std::sin(th), z);
  }
  return out;
}

bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace occugrasp
