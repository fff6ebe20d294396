#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "occugrasp/grasp_types.hpp"
#include "occugrasp/nn/layers.hpp"
#include "occugrasp/pointcloud.hpp"
#include "occugrasp/scene.hpp"
#include "occugrasp/triplane.hpp"

namespace occugrasp {

inline constexpr std::size_t kDefaultRegionBudget = 400000;

/// Candidate-frame test: |xy of R^T (c - p)| <= r + slack and the z part lies
/// in [d_min - slack, d_max + slack].
bool in_grasp_cylinder(const Vec3& c, const CandidateFrame& f, const GraspRegionSpec& spec, double slack = 0.0);

/// Union of candidate cylinders voxelized on the world grid with voxel size
/// spec.v. Voxel (i, j, k) has center ((i, j, k) + 0.5) * v.
struct LocalRegion {
  double voxel_size = 0.01;
  std::vector<VoxelKey> voxels;
  std::vector<Vec3> centers;
  std::vector<int> owner;  // nearest candidate point, ties to the lower index
  std::unordered_map<VoxelKey, int, VoxelKeyHash> index;
  std::size_t size() const { return voxels.size(); }
};

/// Voxels are listed in candidate order, then z, y, x order within each
/// candidate's bounding box, first occurrence only. If `clip` is given,
/// voxels whose centers fall outside it are dropped.
LocalRegion build_region(const std::vector<CandidateFrame>& candidates, const GraspRegionSpec& spec,
                         std::size_t budget = kDefaultRegionBudget, const Aabb* clip = nullptr, int threads = 1);

/// Lattice voxels whose centers lie in one candidate's cylinder.
std::vector<VoxelKey> cylinder_voxels(const CandidateFrame& f, const GraspRegionSpec& spec);

/// Indices of region voxels inside one candidate's cylinder, ascending.
std::vector<std::size_t> cylinder_members(const LocalRegion& region, const CandidateFrame& f,
                                          const GraspRegionSpec& spec);

/// Index of the nearest point for each query, ties to the lower index.
std::vector<int> nearest_indices(const std::vector<Vec3>& queries, const std::vector<Vec3>& points, int threads = 1);

/// World box that the cloud's unit-cube map sends to the query domain
/// [-slack, 1 + slack]^3.
Aabb query_domain_box(const UnitCubeAffine& affine, double slack = kQueryDomainSlack);

/// Ground-truth bit per region center; 0 outside the grid. Throws
/// "misaligned grids" if voxel sizes differ or the grid origin is off the
/// region lattice.
std::vector<double> crop_ground_truth(const LocalRegion& region, const OccupancyGrid& gt);

/// Indices into a region of size m: all of them when m <= n, otherwise n
/// distinct uniform draws in ascending order.
std::vector<std::size_t> sample_training_voxels(std::size_t m, std::size_t n, std::uint64_t seed);

/// Positional-embedding MLP over (query, nearest candidate, offset) and the
/// occupancy decoder on the C_Q-wide queried feature.
struct OccupancyHead {
  nn::Mlp pe;       // 9 -> w -> w, w = C_Q - C_T - C_P
  nn::Mlp decoder;  // C_Q -> C_Q/2 -> 1
  int c_t = 0, c_p = 0, c_q = 0;

  OccupancyHead() = default;
  OccupancyHead(nn::ParameterStore& store, const std::string& name, int c_t, int c_p, int c_q);
  int pe_width() const { return c_q - c_t - c_p; }
};

/// Rows [M, 9]: normalized query, normalized nearest candidate point, and the
/// world offset between them divided by the gripper radius.
nn::Tensor relative_position_input(const std::vector<Vec3>& query_world, const std::vector<Vec3>& cand_world,
                                   const std::vector<int>& nearest, const UnitCubeAffine& affine, double radius);

/// Inputs for one batch of occupancy queries in a scene.
struct QueryBatch {
  std::vector<Vec3> world;       // query centers
  std::vector<Vec3> normalized;  // same, through the cloud's unit-cube map
  std::vector<int> nearest;      // nearest candidate per query
};

QueryBatch make_query_batch(const std::vector<Vec3>& world, const std::vector<Vec3>& cand_world,
                            const UnitCubeAffine& affine, int threads = 1);

/// Which parts of the queried feature are computed; disabled parts are
/// zero-filled so the width stays C_Q.
struct QueryParts {
  bool global = true;
  bool local = true;
};

/// f_pq = f_G ⊕ f_p' ⊕ PE, rows [M, C_Q]. `cand_embeddings` holds one row per
/// candidate point.
nn::Var queried_features(nn::Tape& t, const EncodedTriplanes& planes, const GlobalFusers& fusers,
                         const OccupancyHead& head, const QueryBatch& batch, nn::Var cand_embeddings,
                         const std::vector<Vec3>& cand_world, const UnitCubeAffine& affine, double radius,
                         QueryParts parts = {}, TriplaneCounters* counters = nullptr);

/// Occupancy probabilities [M, 1].
nn::Var decode_occupancy(nn::Tape& t, const OccupancyHead& head, nn::Var features);

/// Strict threshold at 0.5.
std::vector<bool> occupied_mask(const nn::Tensor& probabilities);

/// Region voxels flagged in `mask`, materialized into the region's bounding
/// grid (no margin, origin on the world lattice).
OccupancyGrid region_to_grid(const LocalRegion& region, const std::vector<bool>& mask);

}  // namespace occugrasp
