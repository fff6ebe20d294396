#include "occugrasp/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "occugrasp/errors.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::vector<std::size_t> affordance_area(const Tensor& affordance) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < affordance.size(); ++i)
    if (affordance[i] > 0.5) out.push_back(i);
  return out;
}

std::vector<std::size_t> sample_candidates(std::size_t cloud_size, const std::vector<std::size_t>& area,
                                           std::size_t n, std::uint64_t seed) {
  if (cloud_size == 0) throw std::invalid_argument("sample_candidates: empty cloud");
  Rng rng(seed);
  std::vector<std::size_t> out;
  out.reserve(n);
  if (area.empty()) {
    if (cloud_size >= n) return rng.sample_without_replacement(cloud_size, n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(rng.index(cloud_size));
    return out;
  }
  if (area.size() >= n) {
    for (std::size_t i : rng.sample_without_replacement(area.size(), n)) out.push_back(area[i]);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out.push_back(area[rng.index(area.size())]);
  return out;
}

int argmax_row(const Tensor& scores, int row) {
  int best = 0;
  for (int c = 1; c < scores.cols(); ++c)
    if (scores.at(row, c) > scores.at(row, best)) best = c;
  return best;
}

GraspCandidate make_candidate(std::size_t point_index, const Vec3& p, const std::vector<Vec3>& directions,
                              int direction) {
  GraspCandidate c;
  c.point_index = point_index;
  c.p_g = p;
  c.direction = direction;
  c.R_g = frame_from_direction(directions.at(static_cast<std::size_t>(direction)));
  return c;
}

const char* implicit_mode_name(ImplicitMode m) {
  switch (m) {
    case ImplicitMode::Max: return "max";
    case ImplicitMode::None: return "none";
    default: return "sa";
  }
}

ImplicitMode implicit_mode_from_name(const std::string& s) {
  if (s == "max") return ImplicitMode::Max;
  if (s == "none") return ImplicitMode::None;
  if (s == "sa") return ImplicitMode::SetAbstraction;
  throw std::invalid_argument("unknown implicit mode: " + s);
}

ShapeEncoder::ShapeEncoder(nn::ParameterStore& store, const std::string& name, int c_q, int feature_width_,
                           ImplicitMode mode_, double gripper_radius)
    : feature_width(feature_width_), explicit_width(c_q), mode(mode_), radius(gripper_radius) {
  if (c_q < 4) throw std::invalid_argument("shape encoder: C_Q must be at least 4");
  const std::array<int, 4> widths{c_q / 4, c_q / 4, c_q / 2, c_q};
  int prev = 0;
  for (int s = 0; s < 4; ++s) {
    stages[s] = nn::Mlp(store, name + ".sa" + std::to_string(s), {3 + prev, widths[s], widths[s]});
    prev = widths[s];
  }
  if (mode == ImplicitMode::SetAbstraction) {
    implicit_sa = nn::Mlp(store, name + ".implicit", {3 + feature_width, feature_width, feature_width});
  }
}

std::vector<int> implicit_keys(const ShapeInput& in, std::uint64_t seed, std::size_t index) {
  const std::size_t n = in.feature_rows.size();
  Rng rng = Rng::derive(seed, index);
  std::vector<int> out;
  for (std::size_t i : rng.sample_without_replacement(n, std::min<std::size_t>(kImplicitKeys, n)))
    out.push_back(in.feature_rows[i]);
  return out;
}

Var ShapeEncoder::operator()(Tape& t, const std::vector<ShapeInput>& inputs, Var features, std::uint64_t seed) const {
  const int B = static_cast<int>(inputs.size());
  for (const auto& in : inputs)
    if (in.points.size() != in.feature_rows.size()) throw std::invalid_argument("shape input rows misaligned");

  // Explicit branch. Per input: current stage points (candidate frame) and
  // the row of each in the previous stage's feature matrix.
  std::vector<std::vector<Vec3>> pts(inputs.size());
  std::vector<std::vector<int>> rows(inputs.size());
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto& f = inputs[b].frame;
    for (const auto& p : inputs[b].points) pts[b].push_back(f.rotation.transpose() * (p - f.point));
  }
  Var prev{};
  for (int s = 0; s < 4; ++s) {
    const bool last = s == 3;
    std::vector<double> rel;
    std::vector<int> gather, group;
    int groups = last ? B : 0;
    std::vector<std::vector<Vec3>> next_pts(inputs.size());
    std::vector<std::vector<int>> next_rows(inputs.size());
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      const auto& P = pts[b];
      if (P.empty()) continue;
      const auto centers = farthest_point_sample(P, std::min<std::size_t>(kSaCenters[s], P.size()));
      const double rad = kSaRadii[s];
      const double scale = rad > 0.0 ? rad : radius;
      for (std::size_t ci : centers) {
        const int g = last ? static_cast<int>(b) : groups++;
        for (std::size_t j = 0; j < P.size(); ++j) {
          const Vec3 d = P[j] - P[ci];
          if (rad > 0.0 && d.norm() > rad) continue;
          for (int k = 0; k < 3; ++k) rel.push_back(d[k] / scale);
          if (s > 0) gather.push_back(rows[b][j]);
          group.push_back(g);
        }
        next_pts[b].push_back(P[ci]);
        next_rows[b].push_back(g);
      }
    }
    const int R = static_cast<int>(group.size());
    Var in = t.constant(Tensor({R, 3}, std::move(rel)));
    if (s > 0) in = nn::concat_cols(t, {in, nn::gather_rows(t, prev, std::move(gather))});
    prev = nn::max_pool(t, nn::relu(t, stages[s](t, in)), group, groups);
    pts = std::move(next_pts);
    rows = std::move(next_rows);
  }
  const Var explicit_part = prev;

  // Implicit branch over a random subset of the queried features.
  Var implicit_part{};
  if (mode == ImplicitMode::None) {
    implicit_part = t.constant(Tensor({B, feature_width}));
  } else {
    std::vector<int> keys, group;
    std::vector<double> rel;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      const auto& in = inputs[b];
      const std::vector<int> k = implicit_keys(in, seed, b);
      for (int row : k) {
        keys.push_back(row);
        group.push_back(static_cast<int>(b));
        if (mode == ImplicitMode::SetAbstraction) {
          const auto it = std::find(in.feature_rows.begin(), in.feature_rows.end(), row);
          const Vec3& p = in.points[static_cast<std::size_t>(it - in.feature_rows.begin())];
          const Vec3 local = in.frame.rotation.transpose() * (p - in.frame.point) / radius;
          for (int c = 0; c < 3; ++c) rel.push_back(local[c]);
        }
      }
    }
    if (t.value(features).cols() != feature_width) {
      throw std::invalid_argument("shape encoder: feature width " + std::to_string(t.value(features).cols()) +
                                  ", expected " + std::to_string(feature_width));
    }
    Var f = nn::gather_rows(t, features, std::move(keys));
    if (mode == ImplicitMode::SetAbstraction) {
      const int R = static_cast<int>(group.size());
      f = nn::relu(t, implicit_sa(t, nn::concat_cols(t, {t.constant(Tensor({R, 3}, std::move(rel))), f})));
    }
    implicit_part = nn::max_pool(t, f, group, B);
  }
  return nn::concat_cols(t, {explicit_part, implicit_part});
}

PoseHead::PoseHead(nn::ParameterStore& store, const std::string& name, int in, int hidden_width,
                   double gripper_radius)
    : hidden(store, name + ".hidden", in, hidden_width),
      score(store, name + ".score", hidden_width, kPoseCells),
      width(store, name + ".width", hidden_width, kPoseCells),
      radius(gripper_radius) {}

std::pair<Var, Var> PoseHead::operator()(Tape& t, Var shape) const {
  const Var h = nn::relu(t, hidden(t, shape));
  return {nn::sigmoid(t, score(t, h)), nn::scale(t, nn::sigmoid(t, width(t, h)), 2.0 * radius)};
}

GraspPose decode_pose(const GraspCandidate& c, const Tensor& scores, const Tensor& widths, int row) {
  const int cell = argmax_row(scores, row);
  GraspPose p;
  p.p_g = c.p_g;
  p.R_g = c.R_g;
  p.rot_idx = cell_rot(cell);
  p.depth_idx = cell_depth(cell);
  p.width = widths.at(row, cell);
  p.score = scores.at(row, cell);
  return p;
}

std::vector<GraspPose> pose_nms(std::vector<GraspPose> poses, double radius, std::size_t top) {
  std::stable_sort(poses.begin(), poses.end(), [](const GraspPose& a, const GraspPose& b) { return a.score > b.score; });
  std::vector<GraspPose> kept;
  for (const auto& p : poses) {
    if (kept.size() >= top) break;
    const bool near = std::any_of(kept.begin(), kept.end(),
                                  [&](const GraspPose& k) { return (k.p_g - p.p_g).norm() < radius; });
    if (!near) kept.push_back(p);
  }
  return kept;
}

std::vector<Vec3> gripper_samples(const GraspPose& pose, const GripperBody& body, const GraspRegionSpec& spec) {
  std::vector<Vec3> out;
  for (const auto& box : gripper_boxes(pose, body, spec)) {
    const auto s = box_samples(box, spec.v / 2);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

bool in_closing_volume(const GraspPose& pose, const Vec3& c, const GripperBody& body, const GraspRegionSpec& spec) {
  const Vec3 local = pose.rotation().transpose() * (c - pose.p_g);
  const double L = spec.d_max - spec.d_min;
  return std::abs(local.x()) < pose.width / 2 && std::abs(local.y()) <= (body.finger_thickness + spec.v) / 2 &&
         local.z() >= pose.depth() - L && local.z() <= pose.depth() + spec.v / 2;
}

std::vector<GraspPose> collision_filter(const std::vector<GraspPose>& poses, const VoxelSet& occupied,
                                        const GripperBody& body, const GraspRegionSpec& spec) {
  if (occupied.empty()) return poses;
  std::vector<GraspPose> out;
  for (const auto& pose : poses) {
    bool hit = false;
    for (const Vec3& s : gripper_samples(pose, body, spec)) {
      const VoxelKey k = voxel_key(s, spec.v);
      if (!occupied.count(k)) continue;
      const Vec3 c = spec.v * Vec3(k.x + 0.5, k.y + 0.5, k.z + 0.5);
      if (!in_closing_volume(pose, c, body, spec)) {
        hit = true;
        break;
      }
    }
    if (!hit) out.push_back(pose);
  }
  return out;
}

std::string poses_to_csv(const std::vector<GraspPose>& poses) {
  std::string out = "px,py,pz,qs,qx,qy,qz,rot_idx,depth_idx,width,score\n";
  char buf[512];
  for (const auto& p : poses) {
    const Quaternion q = matrix_to_quat(p.rotation());
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g\n", p.p_g.x(),
                  p.p_g.y(), p.p_g.z(), q.s, q.vx, q.vy, q.vz, p.rot_idx, p.depth_idx, p.width, p.score);
    out += buf;
  }
  return out;
}

void write_poses_csv(const std::string& path, const std::vector<GraspPose>& poses) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << poses_to_csv(poses);
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace occugrasp
