#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "occugrasp/errors.hpp"
#include "occugrasp/geometry.hpp"

namespace occugrasp {

using PointCloud = std::vector<Vec3>;

/// Per-axis affine x' = (x - lo) / extent.
struct UnitCubeAffine {
  Vec3 lo = Vec3::Zero();
  Vec3 extent = Vec3::Ones();

  Vec3 apply(const Vec3& p) const { return (p - lo).cwiseQuotient(extent); }
  Vec3 invert(const Vec3& q) const { return q.cwiseProduct(extent) + lo; }
};

/// Exactly n points; without replacement if the cloud has at least n, with
/// replacement otherwise.
PointCloud sample_fixed(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

/// Greedy farthest point sampling starting at index 0. Ties go to the lower index.
std::vector<std::size_t> farthest_point_sample(const std::vector<Vec3>& items, std::size_t k);

/// Bounds of a nonempty cloud.
void bounds(const PointCloud& cloud, Vec3& lo, Vec3& hi);

/// Affine that maps the cloud's bounding box onto [0,1]^3. An axis with zero
/// extent gets extent 1 and is centered so its points land on 0.5.
UnitCubeAffine unit_cube_affine(const PointCloud& cloud);

std::pair<PointCloud, UnitCubeAffine> normalize_unit_cube(const PointCloud& cloud);

/// Perturbs a random floor(fraction*N) subset with per-axis N(0, sigma^2) offsets.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, double fraction,
                              std::uint64_t seed);

/// Indices of the points that add_gaussian_noise perturbs for the same arguments.
std::vector<std::size_t> noise_subset(std::size_t n, double fraction, std::uint64_t seed);

struct VoxelKey {
  std::int64_t x = 0, y = 0, z = 0;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept;
};

VoxelKey voxel_key(const Vec3& p, double size);

/// One centroid per occupied voxel, in order of first appearance.
PointCloud voxel_downsample(const PointCloud& cloud, double size);

/// For every point, the centroid of all points sharing its voxel.
PointCloud voxel_neighborhood_centroids(const PointCloud& cloud, double size);

void write_pcb1(const std::string& path, const PointCloud& cloud);
PointCloud read_pcb1(const std::string& path);

}  // namespace occugrasp
