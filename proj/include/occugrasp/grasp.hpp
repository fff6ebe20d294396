#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "occugrasp/grasp_types.hpp"
#include "occugrasp/nn/layers.hpp"
#include "occugrasp/oracle.hpp"
#include "occugrasp/pointcloud.hpp"

namespace occugrasp {

/// Points with affordance strictly above 0.5.
std::vector<std::size_t> affordance_area(const nn::Tensor& affordance);

/// n candidate point indices: uniform without replacement from the
/// affordance area when it holds at least n points, with replacement when it
/// is smaller, and from all points when it is empty. Throws on an empty cloud.
std::vector<std::size_t> sample_candidates(std::size_t cloud_size, const std::vector<std::size_t>& area,
                                           std::size_t n, std::uint64_t seed);

/// Index of the largest score, ties to the lower index.
int argmax_row(const nn::Tensor& scores, int row);

struct GraspCandidate {
  std::size_t point_index = 0;
  Vec3 p_g = Vec3::Zero();
  int direction = 0;
  Mat3 R_g = Mat3::Identity();
  CandidateFrame frame() const { return {p_g, R_g}; }
};

/// Candidate whose frame maps +z onto directions[direction].
GraspCandidate make_candidate(std::size_t point_index, const Vec3& p, const std::vector<Vec3>& directions,
                              int direction);

/// Implicit branch of the shape feature.
enum class ImplicitMode { Max, None, SetAbstraction };
const char* implicit_mode_name(ImplicitMode m);
ImplicitMode implicit_mode_from_name(const std::string& s);

/// Occupied points of one candidate, in meters, with the rows of the feature
/// matrix that belong to them.
struct ShapeInput {
  CandidateFrame frame;
  std::vector<Vec3> points;
  std::vector<int> feature_rows;
};

inline constexpr std::array<int, 4> kSaCenters{32, 8, 4, 1};
inline constexpr std::array<double, 4> kSaRadii{0.02, 0.04, 0.08, 0.0};  // 0: one group holding everything
inline constexpr int kImplicitKeys = 32;

/// Set-abstraction stages over the occupied points (coordinates in the
/// candidate frame) concatenated with a max-pooled random subset of their
/// queried features.
struct ShapeEncoder {
  std::array<nn::Mlp, 4> stages;
  nn::Mlp implicit_sa;  // used only in SetAbstraction mode
  int feature_width = 0;
  int explicit_width = 0;
  ImplicitMode mode = ImplicitMode::Max;
  double radius = 0.05;

  ShapeEncoder() = default;
  /// Stage widths c_q/4, c_q/4, c_q/2, c_q.
  ShapeEncoder(nn::ParameterStore& store, const std::string& name, int c_q, int feature_width, ImplicitMode mode,
               double gripper_radius);
  int out_width() const { return explicit_width + feature_width; }

  /// Rows [B, out_width], one per input; empty inputs give zero rows.
  nn::Var operator()(nn::Tape& t, const std::vector<ShapeInput>& inputs, nn::Var features, std::uint64_t seed) const;
};

/// The key rows the implicit branch pools for one input.
std::vector<int> implicit_keys(const ShapeInput& in, std::uint64_t seed, std::size_t index);

/// Shared hidden layer with separate score and width outputs over the
/// 12 x 4 rotation/depth grid.
struct PoseHead {
  nn::Linear hidden;
  nn::Linear score;
  nn::Linear width;
  double radius = 0.05;

  PoseHead() = default;
  PoseHead(nn::ParameterStore& store, const std::string& name, int in, int hidden_width, double gripper_radius);
  /// Scores [B, 48] in (0,1) and widths [B, 48] in (0, 2r).
  std::pair<nn::Var, nn::Var> operator()(nn::Tape& t, nn::Var shape) const;
};

/// Pose at the highest-scoring cell (ties to the lower flat index).
GraspPose decode_pose(const GraspCandidate& c, const nn::Tensor& scores, const nn::Tensor& widths, int row);

/// Greedy NMS by descending score; stable for equal scores.
std::vector<GraspPose> pose_nms(std::vector<GraspPose> poses, double radius = 0.03, std::size_t top = 50);

using VoxelSet = std::unordered_set<VoxelKey, VoxelKeyHash>;

/// Gripper body samples at spacing v/2 (fingers and palm).
std::vector<Vec3> gripper_samples(const GraspPose& pose, const GripperBody& body, const GraspRegionSpec& spec);

/// True if a voxel center lies in the space the fingers close over, widened
/// by half a voxel across the finger breadth and past the fingertips.
bool in_closing_volume(const GraspPose& pose, const Vec3& c, const GripperBody& body, const GraspRegionSpec& spec);

/// Keeps poses whose body samples avoid every occupied voxel outside the
/// closing volume.
std::vector<GraspPose> collision_filter(const std::vector<GraspPose>& poses, const VoxelSet& occupied,
                                        const GripperBody& body, const GraspRegionSpec& spec);

/// CSV: px,py,pz,qs,qx,qy,qz,rot_idx,depth_idx,width,score with the full
/// rotation as a scalar-first quaternion.
std::string poses_to_csv(const std::vector<GraspPose>& poses);
void write_poses_csv(const std::string& path, const std::vector<GraspPose>& poses);

}  // namespace occugrasp
