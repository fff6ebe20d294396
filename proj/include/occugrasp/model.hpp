#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "occugrasp/grasp.hpp"
#include "occugrasp/nn/layers.hpp"
#include "occugrasp/occupancy.hpp"
#include "occugrasp/triplane.hpp"

namespace occugrasp {

/// How the local part of a queried feature is formed.
///   nearest: embedding of the nearest candidate point plus relative position
///   ball:    max-pooled embeddings of cloud points within kBallRadius of the
///            query plus relative position to the nearest candidate
enum class LocalMode { Nearest, Ball };
const char* local_mode_name(LocalMode m);
LocalMode local_mode_from_name(const std::string& s);

inline constexpr double kBallRadius = 0.02;

/// Architecture and ablation switches. Everything here is stored in the
/// checkpoint descriptor.
struct ModelConfig {
  int k_groups = 3;
  int plane_h = 16;
  int plane_w = 16;
  int c_p = 32;
  int c_t = 16;
  int c_q = 64;
  int views = 60;
  GraspRegionSpec spec;
  GripperBody body;
  bool use_density = true;
  bool use_global = true;
  bool use_local = true;
  bool use_occupancy = true;
  bool refine = true;
  ImplicitMode implicit_mode = ImplicitMode::Max;
  LocalMode local_mode = LocalMode::Nearest;

  /// "key=value;..." in a fixed key order.
  std::string descriptor() const;
  static ModelConfig from_descriptor(const std::string& d);
  /// Throws std::invalid_argument naming the first inconsistent field.
  void validate() const;
};

/// All learnable maps, registered in a fixed order.
struct Model {
  ModelConfig cfg;
  nn::ParameterStore store;
  PointEncoder point_encoder;
  nn::Mlp affordance;  // C_P -> C_P -> 1
  nn::Mlp view;        // C_P -> C_P -> V
  std::array<nn::PlaneEncoder, 3> plane_encoders;
  GlobalFusers fusers;
  OccupancyHead occupancy;
  ShapeEncoder shape;
  nn::Mlp refine;  // shape width -> C_Q -> V
  PoseHead pose;
  FrameSet frames;
  std::vector<Vec3> directions;

  explicit Model(const ModelConfig& cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// Width of the per-row features the shape encoder pools: C_Q with
  /// occupancy, C_P (point embeddings) without.
  int shape_feature_width() const;
};

/// Per-scene encoder outputs.
struct SceneEncoding {
  PointCloud world;
  PointCloud normalized;
  UnitCubeAffine affine;
  nn::Var embeddings;  // [N, C_P]
  nn::Var affordance;  // [N, 1]
  EncodedTriplanes planes;
  bool has_planes = false;
};

SceneEncoding encode_scene(nn::Tape& t, const Model& m, const PointCloud& world, TriplaneCounters* counters = nullptr);

/// Only the point encoder and affordance head (no planes).
SceneEncoding encode_points_only(nn::Tape& t, const Model& m, const PointCloud& world);

/// Tri-plane construction for an encoding made by encode_points_only.
void build_planes(nn::Tape& t, const Model& m, SceneEncoding& enc, TriplaneCounters* counters = nullptr);

/// Sigmoid view scores [B, V] for rows of point embeddings.
nn::Var view_scores(nn::Tape& t, const Model& m, nn::Var rows);

/// Candidate set for occupancy queries: world points and their embeddings.
struct CandidateContext {
  std::vector<Vec3> points;
  nn::Var embeddings;  // [n, C_P]
};

/// Queried features [M, C_Q] for world-space queries.
nn::Var query_features(nn::Tape& t, const Model& m, const SceneEncoding& enc, const CandidateContext& cands,
                       const std::vector<Vec3>& queries, TriplaneCounters* counters = nullptr, int threads = 1);

/// Occupancy probabilities [M, 1] from queried features.
nn::Var occupancy_probabilities(nn::Tape& t, const Model& m, nn::Var features);

/// Sigmoid refinement view scores [B, V].
nn::Var refine_scores(nn::Tape& t, const Model& m, nn::Var shape);

struct StageTimes {
  double encode = 0.0;  // point encoder, affordance, candidates, views
  double planes = 0.0;  // tri-plane projection and plane encoders
  double query = 0.0;   // region building and occupancy queries
  double decode = 0.0;  // shape features, refinement, poses, filtering, NMS
  double total = 0.0;
};

struct InferOptions {
  std::size_t candidates = 1024;
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t region_budget = kDefaultRegionBudget;
  std::size_t nms_top = 50;
  double nms_radius = 0.03;
  /// 0 queries the local region. n > 0 queries every cell of an n^3 grid
  /// over the query domain instead (the dense global baseline); region
  /// voxels then take the values of the cell containing their center.
  std::size_t dense_grid = 0;
};

struct InferResult {
  std::vector<GraspCandidate> candidates;  // after refinement
  std::vector<int> initial_directions;
  LocalRegion region;
  std::vector<double> probabilities;  // per region voxel; empty without occupancy
  std::vector<bool> occupied;
  std::vector<GraspPose> decoded;  // one per candidate
  std::vector<GraspPose> poses;    // after collision filtering and NMS
  std::size_t queried_voxels = 0;
  TriplaneCounters counters;
  StageTimes times;
};

/// Full pipeline on a world-frame cloud with frozen parameters.
InferResult infer(const Model& m, const PointCloud& world, const InferOptions& opt);

/// Shape inputs for candidates: occupied region voxels inside each frame's
/// cylinder, with the matching rows of the region feature matrix.
std::vector<ShapeInput> shape_inputs_from_region(const LocalRegion& region, const std::vector<bool>& occupied,
                                                 const std::vector<CandidateFrame>& frames,
                                                 const GraspRegionSpec& spec);

/// Shape inputs from observed points inside each frame's cylinder; rows
/// index the cloud.
std::vector<ShapeInput> shape_inputs_from_cloud(const PointCloud& world, const std::vector<CandidateFrame>& frames,
                                                const GraspRegionSpec& spec);

/// Voxelized observed points (used as the occupied set without occupancy).
VoxelSet voxelize_points(const PointCloud& world, double v);

}  // namespace occugrasp
