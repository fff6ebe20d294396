#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "occugrasp/geometry.hpp"
#include "occugrasp/pointcloud.hpp"

namespace occugrasp {

enum class PrimitiveKind { Sphere, Box, Cylinder, Capsule };

const char* kind_name(PrimitiveKind k);
PrimitiveKind kind_from_name(const std::string& s);
/// Number of shape parameters for a kind (sphere 1, box 3, cylinder 2, capsule 2).
int kind_param_count(PrimitiveKind k);

/// Solid primitive posed in the world. Cylinder and capsule axes run along
/// local z. Parameters:
///   sphere   radius
///   box      half extents x, y, z
///   cylinder radius, half height
///   capsule  radius, half length of the core segment
struct SdfPrimitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  Vec3 center = Vec3::Zero();
  Quaternion orientation;
  std::vector<double> params;

  /// Rotation derived from orientation; kept in sync by set_orientation.
  Mat3 rotation = Mat3::Identity();

  void set_orientation(const Quaternion& q);
  double sdf(const Vec3& x) const;
  double bounding_radius() const;
  /// Half extent of the posed shape along world z.
  double half_height_z() const;
};

SdfPrimitive make_primitive(PrimitiveKind kind, const Vec3& center, const Quaternion& q,
                            std::vector<double> params);

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct Camera {
  Quaternion orientation;
  Mat3 rotation = Mat3::Identity();  // columns: camera x (right), y (down), z (forward) in world
  Vec3 position = Vec3::Zero();
  double fx = 110.0, fy = 110.0, cx = 64.0, cy = 48.0;
  int width = 128, height = 96;

  void set_orientation(const Quaternion& q) {
    orientation = q;
    rotation = quat_to_matrix(q);
  }
  Vec3 unproject(double u, double v, double depth) const {
    return {(u - cx) * depth / fx, (v - cy) * depth / fy, depth};
  }
  /// (u, v, depth) of a camera-frame point.
  Vec3 project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy, p.z()}; }
  Vec3 to_world(const Vec3& p) const { return rotation * p + position; }
  Vec3 to_camera(const Vec3& w) const { return rotation.transpose() * (w - position); }
};

/// Camera at `eye` looking at `target` with world +z as the up hint.
Camera look_at(const Vec3& eye, const Vec3& target);

struct SdfScene {
  std::vector<SdfPrimitive> objects;
  bool has_table = true;
  double table_height = 0.0;
  Aabb bounds{Vec3(-0.3, -0.3, -0.1), Vec3(0.3, 0.3, 0.5)};
  std::uint64_t rng_seed = 0;
  Camera camera;

  /// Signed distance of the objects only.
  double object_sdf(const Vec3& x) const;
};

/// Exact union SDF of objects and table half-space z <= table_height.
double scene_sdf(const SdfScene& scene, const Vec3& x);

/// Central-difference gradient, normalized.
Vec3 scene_normal(const SdfScene& scene, const Vec3& x, double h = 1e-4);

/// Random tabletop scene: 3-8 primitives resting on the table with at least
/// 5 mm between bounding spheres, and a primary camera above one side.
SdfScene generate_scene(std::uint64_t seed);

struct OccupancyGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.01;
  std::array<std::uint32_t, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> occupancy;  // one byte per voxel, x fastest

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t linear(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return i + static_cast<std::size_t>(dims[0]) * (j + static_cast<std::size_t>(dims[1]) * k);
  }
  Vec3 center(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return origin + voxel_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  /// Occupancy at the voxel containing p; false outside the grid.
  bool occupied_at(const Vec3& p) const;
  std::size_t occupied_count() const;
};

/// Voxel occupied iff the scene SDF at its center is <= 0. The grid covers
/// scene.bounds with origin at bounds.lo.
OccupancyGrid ground_truth_occupancy(const SdfScene& scene, double voxel_size, int threads = 1);

using DepthImage = std::vector<double>;  // row-major height x width, 0 = miss

DepthImage render_depth(const SdfScene& scene, const Camera& cam, int threads = 1);
/// Camera-frame points for nonzero pixels, row-major pixel order.
PointCloud depth_to_pointcloud(const DepthImage& depth, const Camera& cam);
/// World-frame concatenation of camera-frame clouds.
PointCloud merge_views(const std::vector<PointCloud>& clouds, const std::vector<Camera>& poses);

/// `count` cameras: the scene's primary camera plus farthest-point picks from
/// a fixed ring of candidate viewpoints around the same target.
std::vector<Camera> select_views(const SdfScene& scene, int count);

/// Rendered world-frame observation from `views` cameras.
PointCloud observe(const SdfScene& scene, int views, int threads = 1);

// Scene text format:
//   seed <u64>
//   table <height> | table none
//   bounds x0 y0 z0 x1 y1 z1
//   camera px py pz qs qx qy qz fx fy cx cy width height
//   <kind> cx cy cz qx qy qz qw params...
// Quaternions are scalar first (the qx column holds the scalar part).
std::string scene_to_text(const SdfScene& scene);
SdfScene scene_from_text(const std::string& text);
void write_scene(const std::string& path, const SdfScene& scene);
SdfScene read_scene(const std::string& path);

void write_occ1(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid read_occ1(const std::string& path);

}  // namespace occugrasp
