#include "occugrasp/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "occugrasp/parallel.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

using nn::Tape;
using nn::Tensor;
using nn::Var;

bool in_grasp_cylinder(const Vec3& c, const CandidateFrame& f, const GraspRegionSpec& spec, double slack) {
  const Vec3 local = f.rotation.transpose() * (c - f.point);
  const double rr = spec.r + slack;
  return local.head<2>().squaredNorm() <= rr * rr && local.z() >= spec.d_min - slack &&
         local.z() <= spec.d_max + slack;
}

namespace {

std::vector<VoxelKey> candidate_voxels(const CandidateFrame& f, const GraspRegionSpec& spec, const Aabb* clip) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 local((corner & 1) ? spec.r : -spec.r, (corner & 2) ? spec.r : -spec.r,
                     (corner & 4) ? spec.d_max : spec.d_min);
    const Vec3 w = f.point + f.rotation * local;
    lo = lo.cwiseMin(w);
    hi = hi.cwiseMax(w);
  }
  const double v = spec.v;
  std::array<std::int64_t, 3> a{}, b{};
  for (int k = 0; k < 3; ++k) {
    a[k] = static_cast<std::int64_t>(std::ceil(lo[k] / v - 0.5)) - 1;
    b[k] = static_cast<std::int64_t>(std::floor(hi[k] / v - 0.5)) + 1;
  }
  std::vector<VoxelKey> out;
  for (std::int64_t z = a[2]; z <= b[2]; ++z)
    for (std::int64_t y = a[1]; y <= b[1]; ++y)
      for (std::int64_t x = a[0]; x <= b[0]; ++x) {
        const Vec3 c = v * Vec3(x + 0.5, y + 0.5, z + 0.5);
        if (!in_grasp_cylinder(c, f, spec)) continue;
        if (clip && !clip->contains(c)) continue;
        out.push_back({x, y, z});
      }
  return out;
}

}  // namespace

LocalRegion build_region(const std::vector<CandidateFrame>& candidates, const GraspRegionSpec& spec,
                         std::size_t budget, const Aabb* clip, int threads) {
  if (candidates.empty()) throw std::invalid_argument("build_region: no candidates");
  if (!(spec.r > 0.0) || !(spec.d_min < spec.d_max) || !(spec.v > 0.0)) {
    throw std::invalid_argument("build_region: invalid grasp region spec");
  }
  std::vector<std::vector<VoxelKey>> per(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) { per[i] = candidate_voxels(candidates[i], spec, clip); });
  LocalRegion region;
  region.voxel_size = spec.v;
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  for (const auto& list : per)
    for (const auto& key : list) {
      if (!seen.insert(key).second) continue;
      if (region.voxels.size() >= budget) throw std::runtime_error("region budget exceeded");
      region.index.emplace(key, static_cast<int>(region.voxels.size()));
      region.voxels.push_back(key);
      region.centers.push_back(spec.v * Vec3(key.x + 0.5, key.y + 0.5, key.z + 0.5));
    }
  std::vector<Vec3> points;
  points.reserve(candidates.size());
  for (const auto& c : candidates) points.push_back(c.point);
  region.owner = nearest_indices(region.centers, points, threads);
  return region;
}

std::vector<VoxelKey> cylinder_voxels(const CandidateFrame& f, const GraspRegionSpec& spec) {
  return candidate_voxels(f, spec, nullptr);
}

std::vector<std::size_t> cylinder_members(const LocalRegion& region, const CandidateFrame& f,
                                          const GraspRegionSpec& spec) {
  std::vector<std::size_t> out;
  for (const auto& key : candidate_voxels(f, spec, nullptr)) {
    const auto it = region.index.find(key);
    if (it != region.index.end()) out.push_back(static_cast<std::size_t>(it->second));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> nearest_indices(const std::vector<Vec3>& queries, const std::vector<Vec3>& points, int threads) {
  if (points.empty() && !queries.empty()) throw std::invalid_argument("nearest_indices: no points");
  std::vector<int> out(queries.size(), 0);
  parallel_for(queries.size(), threads, [&](std::size_t q) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = (points[i] - queries[q]).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(i);
      }
    }
    out[q] = arg;
  });
  return out;
}

Aabb query_domain_box(const UnitCubeAffine& affine, double slack) {
  return {affine.invert(Vec3::Constant(-slack)), affine.invert(Vec3::Constant(1.0 + slack))};
}

std::vector<double> crop_ground_truth(const LocalRegion& region, const OccupancyGrid& gt) {
  const double v = region.voxel_size;
  // Grids read from OCC1 carry f32 origin and voxel size.
  if (std::abs(gt.voxel_size - v) > 1e-6 * v) throw std::invalid_argument("misaligned grids");
  std::array<std::int64_t, 3> off{};
  for (int k = 0; k < 3; ++k) {
    const double o = gt.origin[k] / v;
    off[k] = static_cast<std::int64_t>(std::llround(o));
    if (std::abs(o - static_cast<double>(off[k])) > 1e-4) throw std::invalid_argument("misaligned grids");
  }
  std::vector<double> out(region.size(), 0.0);
  for (std::size_t n = 0; n < region.size(); ++n) {
    const auto& key = region.voxels[n];
    const std::int64_t i = key.x - off[0], j = key.y - off[1], k = key.z - off[2];
    if (i < 0 || j < 0 || k < 0 || i >= gt.dims[0] || j >= gt.dims[1] || k >= gt.dims[2]) continue;
    out[n] = gt.occupancy[gt.linear(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                    static_cast<std::uint32_t>(k))]
                 ? 1.0
                 : 0.0;
  }
  return out;
}

std::vector<std::size_t> sample_training_voxels(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (m <= n) {
    out.resize(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = i;
    return out;
  }
  Rng rng(seed);
  out = rng.sample_without_replacement(m, n);
  std::sort(out.begin(), out.end());
  return out;
}

OccupancyHead::OccupancyHead(nn::ParameterStore& store, const std::string& name, int c_t_, int c_p_, int c_q_)
    : c_t(c_t_), c_p(c_p_), c_q(c_q_) {
  if (pe_width() < 1) throw std::invalid_argument("occupancy head: C_Q must exceed C_T + C_P");
  if (c_q < 2) throw std::invalid_argument("occupancy head: C_Q must be at least 2");
  pe = nn::Mlp(store, name + ".pe", {9, pe_width(), pe_width()});
  decoder = nn::Mlp(store, name + ".decoder", {c_q, c_q / 2, 1});
}

Tensor relative_position_input(const std::vector<Vec3>& query_world, const std::vector<Vec3>& cand_world,
                               const std::vector<int>& nearest, const UnitCubeAffine& affine, double radius) {
  Tensor x({static_cast<int>(query_world.size()), 9});
  for (std::size_t n = 0; n < query_world.size(); ++n) {
    const Vec3& p = cand_world.at(static_cast<std::size_t>(nearest[n]));
    const Vec3 a = affine.apply(query_world[n]), b = affine.apply(p), d = (query_world[n] - p) / radius;
    const int r = static_cast<int>(n);
    for (int k = 0; k < 3; ++k) {
      x.at(r, k) = a[k];
      x.at(r, 3 + k) = b[k];
      x.at(r, 6 + k) = d[k];
    }
  }
  return x;
}

QueryBatch make_query_batch(const std::vector<Vec3>& world, const std::vector<Vec3>& cand_world,
                            const UnitCubeAffine& affine, int threads) {
  QueryBatch b;
  b.world = world;
  b.normalized.reserve(world.size());
  for (const auto& p : world) b.normalized.push_back(affine.apply(p));
  b.nearest = nearest_indices(world, cand_world, threads);
  return b;
}

Var queried_features(Tape& t, const EncodedTriplanes& planes, const GlobalFusers& fusers, const OccupancyHead& head,
                     const QueryBatch& batch, Var cand_embeddings, const std::vector<Vec3>& cand_world,
                     const UnitCubeAffine& affine, double radius, QueryParts parts, TriplaneCounters* counters) {
  const int M = static_cast<int>(batch.world.size());
  Var global = parts.global ? query_global(t, planes, fusers, batch.normalized, counters)
                            : t.constant(Tensor({M, head.c_t}));
  if (!parts.local) return nn::concat_cols(t, {global, t.constant(Tensor({M, head.c_p + head.pe_width()}))});
  if (t.value(cand_embeddings).cols() != head.c_p) {
    throw std::invalid_argument("queried_features: candidate embeddings have the wrong width");
  }
  Var fp = nn::gather_rows(t, cand_embeddings, batch.nearest);
  Var pe = head.pe(t, t.constant(relative_position_input(batch.world, cand_world, batch.nearest, affine, radius)));
  return nn::concat_cols(t, {global, fp, pe});
}

Var decode_occupancy(Tape& t, const OccupancyHead& head, Var features) {
  return nn::sigmoid(t, head.decoder(t, features));
}

std::vector<bool> occupied_mask(const Tensor& probabilities) {
  std::vector<bool> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) out[i] = probabilities[i] > 0.5;
  return out;
}

OccupancyGrid region_to_grid(const LocalRegion& region, const std::vector<bool>& mask) {
  OccupancyGrid g;
  g.voxel_size = region.voxel_size;
  if (region.voxels.empty()) return g;
  VoxelKey lo = region.voxels[0], hi = lo;
  for (const auto& k : region.voxels) {
    lo = {std::min(lo.x, k.x), std::min(lo.y, k.y), std::min(lo.z, k.z)};
    hi = {std::max(hi.x, k.x), std::max(hi.y, k.y), std::max(hi.z, k.z)};
  }
  g.origin = region.voxel_size * Vec3(static_cast<double>(lo.x), static_cast<double>(lo.y), static_cast<double>(lo.z));
  g.dims = {static_cast<std::uint32_t>(hi.x - lo.x + 1), static_cast<std::uint32_t>(hi.y - lo.y + 1),
            static_cast<std::uint32_t>(hi.z - lo.z + 1)};
  g.occupancy.assign(g.voxel_count(), 0);
  for (std::size_t n = 0; n < region.size(); ++n) {
    if (!mask.at(n)) continue;
    const auto& k = region.voxels[n];
    g.occupancy[g.linear(static_cast<std::uint32_t>(k.x - lo.x), static_cast<std::uint32_t>(k.y - lo.y),
                         static_cast<std::uint32_t>(k.z - lo.z))] = 1;
  }
  return g;
}

}  // namespace occugrasp
