#include "occugrasp/pointcloud.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "binio.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

PointCloud sample_fixed(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  if (cloud.empty()) throw std::invalid_argument("sample_fixed: empty cloud");
  Rng rng(seed);
  PointCloud out;
  out.reserve(n);
  if (cloud.size() >= n) {
    for (std::size_t i : rng.sample_without_replacement(cloud.size(), n)) out.push_back(cloud[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back(cloud[rng.index(cloud.size())]);
  }
  return out;
}

std::vector<std::size_t> farthest_point_sample(const std::vector<Vec3>& items, std::size_t k) {
  if (k > items.size()) throw std::invalid_argument("farthest_point_sample: k exceeds point count");
  std::vector<std::size_t> picked;
  if (k == 0) return picked;
  picked.reserve(k);
  std::vector<double> dist(items.size(), std::numeric_limits<double>::infinity());
  std::size_t cur = 0;
  for (std::size_t step = 0; step < k; ++step) {
    picked.push_back(cur);
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const double d = (items[i] - items[cur]).squaredNorm();
      if (d < dist[i]) dist[i] = d;
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    cur = best;
  }
  return picked;
}

void bounds(const PointCloud& cloud, Vec3& lo, Vec3& hi) {
  if (cloud.empty()) throw std::invalid_argument("bounds: empty cloud");
  lo = hi = cloud[0];
  for (const auto& p : cloud) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

UnitCubeAffine unit_cube_affine(const PointCloud& cloud) {
  Vec3 lo, hi;
  bounds(cloud, lo, hi);
  UnitCubeAffine a;
  for (int k = 0; k < 3; ++k) {
    const double e = hi[k] - lo[k];
    if (e > 0.0) {
      a.lo[k] = lo[k];
      a.extent[k] = e;
    } else {
      a.lo[k] = lo[k] - 0.5;
      a.extent[k] = 1.0;
    }
  }
  return a;
}

std::pair<PointCloud, UnitCubeAffine> normalize_unit_cube(const PointCloud& cloud) {
  const UnitCubeAffine a = unit_cube_affine(cloud);
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(a.apply(p).cwiseMax(0.0).cwiseMin(1.0));
  return {std::move(out), a};
}

std::vector<std::size_t> noise_subset(std::size_t n, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("noise fraction must be in [0,1]");
  const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  Rng rng(seed);
  return rng.sample_without_replacement(n, m);
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, double fraction,
                              std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  PointCloud out = cloud;
  if (sigma == 0.0) return out;
  const auto subset = noise_subset(cloud.size(), fraction, seed);
  Rng rng(mix_seed(seed, 0x6e6f697365ull));
  for (std::size_t i : subset) {
    const double dx = rng.normal(), dy = rng.normal(), dz = rng.normal();
    out[i] += sigma * Vec3(dx, dy, dz);
  }
  return out;
}

std::size_t VoxelKeyHash::operator()(const VoxelKey& k) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

VoxelKey voxel_key(const Vec3& p, double size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / size)),
          static_cast<std::int64_t>(std::floor(p.y() / size)),
          static_cast<std::int64_t>(std::floor(p.z() / size))};
}

namespace {

struct VoxelAccumulator {
  std::vector<Vec3> sums;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> slot_of_point;
};

VoxelAccumulator accumulate(const PointCloud& cloud, double size) {
  if (!(size > 0.0)) throw std::invalid_argument("voxel size must be > 0");
  VoxelAccumulator acc;
  acc.slot_of_point.reserve(cloud.size());
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slots;
  slots.reserve(cloud.size());
  for (const auto& p : cloud) {
    auto [it, inserted] = slots.try_emplace(voxel_key(p, size), acc.sums.size());
    if (inserted) {
      acc.sums.push_back(Vec3::Zero());
      acc.counts.push_back(0);
    }
    acc.sums[it->second] += p;
    acc.counts[it->second] += 1;
    acc.slot_of_point.push_back(it->second);
  }
  return acc;
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double size) {
  const VoxelAccumulator acc = accumulate(cloud, size);
  PointCloud out;
  out.reserve(acc.sums.size());
  for (std::size_t s = 0; s < acc.sums.size(); ++s) {
    out.push_back(acc.sums[s] / static_cast<double>(acc.counts[s]));
  }
  return out;
}

PointCloud voxel_neighborhood_centroids(const PointCloud& cloud, double size) {
  const VoxelAccumulator acc = accumulate(cloud, size);
  PointCloud out;
  out.reserve(cloud.size());
  for (std::size_t slot : acc.slot_of_point) {
    out.push_back(acc.sums[slot] / static_cast<double>(acc.counts[slot]));
  }
  return out;
}

void write_pcb1(const std::string& path, const PointCloud& cloud) {
  binio::Writer w;
  w.magic("PCB1");
  w.u32(static_cast<std::uint32_t>(cloud.size()));
  for (const auto& p : cloud) {
    w.f32(static_cast<float>(p.x()));
    w.f32(static_cast<float>(p.y()));
    w.f32(static_cast<float>(p.z()));
  }
  w.save(path);
}

PointCloud read_pcb1(const std::string& path) {
  auto r = binio::Reader::load(path);
  r.expect_magic("PCB1");
  const std::uint32_t n = r.u32();
  if (r.remaining() != static_cast<std::size_t>(n) * 12) {
    throw FormatError(path + ": point count does not match payload size");
  }
  PointCloud out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = r.f32(), y = r.f32(), z = r.f32();
    Vec3 p(x, y, z);
    if (!all_finite(p)) throw FormatError(path + ": non-finite coordinate");
    out.push_back(p);
  }
  return out;
}

}  // namespace occugrasp
