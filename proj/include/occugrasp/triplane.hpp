#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "occugrasp/geometry.hpp"
#include "occugrasp/nn/layers.hpp"
#include "occugrasp/pointcloud.hpp"

namespace occugrasp {

/// Operation counters for the cost model checks.
struct TriplaneCounters {
  std::uint64_t point_touches = 0;   // point binnings while building planes
  std::uint64_t bilinear_reads = 0;  // plane samples while querying
  std::uint64_t mlp_calls = 0;       // fused fuser invocations per query
};

/// Per-point MLP over (normalized xyz, normalized centroid of the point's
/// 5 mm world voxel): 6 -> width -> width.
struct PointEncoder {
  nn::Mlp mlp;
  PointEncoder() = default;
  PointEncoder(nn::ParameterStore& store, const std::string& name, int width);
  int width() const { return mlp.out(); }
};

inline constexpr double kNeighborhoodVoxel = 0.005;
inline constexpr double kNormalizedSlack = 1e-6;

/// Encoder input rows [N, 6] for a world-frame cloud normalized by `affine`.
/// Throws if any normalized coordinate leaves [-1e-6, 1 + 1e-6].
nn::Tensor point_encoder_input(const PointCloud& world, const UnitCubeAffine& affine,
                               double neighborhood = kNeighborhoodVoxel);

nn::Var encode_points(nn::Tape& t, const PointEncoder& enc, const nn::Tensor& input);

/// Index data for one group: where each point lands on each plane.
/// Plane i drops rotated axis i: plane 0 spans (y, z), plane 1 (x, z),
/// plane 2 (x, y); the first coordinate runs along W, the second along H.
struct GroupProjection {
  Mat3 rotation = Mat3::Identity();
  UnitCubeAffine rotated_affine;  // maps rotated normalized points to [0,1]^3
  int H = 0, W = 0;
  std::array<std::vector<int>, 3> cell;        // per plane, flat cell index per point
  std::array<std::vector<double>, 3> density;  // per plane, point count per cell
};

GroupProjection project_indices(const PointCloud& normalized, const Mat3& rotation, int H, int W,
                                TriplaneCounters* counters = nullptr);

/// The (u, v) in [0,1]^2 a normalized point projects to on plane i of a group.
std::array<double, 2> plane_coords(const GroupProjection& g, int plane, const Vec3& normalized);

/// Cell (column, row) for plane coordinates: floor(u W), floor(v H), clamped.
std::array<int, 2> plane_cell(double u, double v, int H, int W);

/// Softmax over all cells jointly.
std::vector<double> normalize_density(const std::vector<double>& counts);

/// Raw planes of one group: per plane, [H*W, C] max-pooled embeddings
/// (empty cells 0) plus the density counts held in the projection.
struct RawGroup {
  GroupProjection proj;
  std::array<nn::Var, 3> features;
};

RawGroup project_group(nn::Tape& t, const PointCloud& normalized, nn::Var embeddings, const Mat3& rotation, int H,
                       int W, TriplaneCounters* counters = nullptr);

/// Encoded planes for all groups: per plane i, rows [K*H*W, C_T] with group j
/// occupying rows [j*H*W, (j+1)*H*W).
struct EncodedTriplanes {
  std::vector<GroupProjection> groups;
  std::array<nn::Var, 3> planes;
  int channels = 0;
  int K() const { return static_cast<int>(groups.size()); }
};

/// Applies encoder i to plane i of every group (weights shared across
/// groups), on embedding ⊕ softmax density when use_density is set.
EncodedTriplanes encode_planes(nn::Tape& t, const std::vector<RawGroup>& raw,
                               const std::array<nn::PlaneEncoder, 3>& encoders, bool use_density);

/// Copies encoded plane values into another tape as constants.
EncodedTriplanes detach_planes(const nn::Tape& src, const EncodedTriplanes& planes, nn::Tape& dst);

/// Bilinear taps (flat cell, weight) with cell-center registration and
/// border clamping for a point at (u, v) in [0,1]^2.
std::array<std::pair<int, double>, 4> bilinear_taps(double u, double v, int H, int W);

struct GlobalFusers {
  nn::Mlp e1;  // 3*C_T -> C_T -> C_T, shared across groups
  nn::Mlp e2;  // K*C_T -> C_T -> C_T
  GlobalFusers() = default;
  GlobalFusers(nn::ParameterStore& store, const std::string& name, int K, int channels);
};

inline constexpr double kQueryDomainSlack = 0.05;

/// Global context rows [Q, C_T] for unit-cube-normalized query points.
/// Throws if a query lies outside [-0.05, 1.05]^3; group coordinates are
/// clamped to [0,1].
nn::Var query_global(nn::Tape& t, const EncodedTriplanes& planes, const GlobalFusers& fusers,
                     const std::vector<Vec3>& normalized_queries, TriplaneCounters* counters = nullptr);

/// Raw per-(plane, group) bilinear features, concatenated in group-major
/// order: for each group j, planes 0..2. Rows [Q, 3*K*C_T].
nn::Var sample_planes(nn::Tape& t, const EncodedTriplanes& planes, const std::vector<Vec3>& normalized_queries,
                      TriplaneCounters* counters = nullptr);

/// "TPL1" dump: magic, u32 K, H, W, C, then f32 values ordered by group,
/// plane, row, column, channel.
void write_tpl1(const std::string& path, const nn::Tape& t, const EncodedTriplanes& planes);

}  // namespace occugrasp
