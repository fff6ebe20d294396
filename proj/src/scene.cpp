#include "occugrasp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "occugrasp/parallel.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

const char* kind_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Sphere: return "sphere";
    case PrimitiveKind::Box: return "box";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Capsule: return "capsule";
  }
  return "?";
}

PrimitiveKind kind_from_name(const std::string& s) {
  if (s == "sphere") return PrimitiveKind::Sphere;
  if (s == "box") return PrimitiveKind::Box;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "capsule") return PrimitiveKind::Capsule;
  throw std::invalid_argument("unknown primitive kind: " + s);
}

int kind_param_count(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Sphere: return 1;
    case PrimitiveKind::Box: return 3;
    case PrimitiveKind::Cylinder:
    case PrimitiveKind::Capsule: return 2;
  }
  return 0;
}

void SdfPrimitive::set_orientation(const Quaternion& q) {
  orientation = q;
  rotation = quat_to_matrix(q);
}

double SdfPrimitive::sdf(const Vec3& x) const {
  const Vec3 p = rotation.transpose() * (x - center);
  switch (kind) {
    case PrimitiveKind::Sphere:
      return p.norm() - params[0];
    case PrimitiveKind::Box: {
      const Vec3 q = p.cwiseAbs() - Vec3(params[0], params[1], params[2]);
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
    case PrimitiveKind::Cylinder: {
      const double dx = std::hypot(p.x(), p.y()) - params[0];
      const double dz = std::abs(p.z()) - params[1];
      return std::min(std::max(dx, dz), 0.0) + std::hypot(std::max(dx, 0.0), std::max(dz, 0.0));
    }
    case PrimitiveKind::Capsule: {
      const double z = std::clamp(p.z(), -params[1], params[1]);
      return (p - Vec3(0, 0, z)).norm() - params[0];
    }
  }
  return std::numeric_limits<double>::infinity();
}

double SdfPrimitive::bounding_radius() const {
  switch (kind) {
    case PrimitiveKind::Sphere: return params[0];
    case PrimitiveKind::Box: return Vec3(params[0], params[1], params[2]).norm();
    case PrimitiveKind::Cylinder: return std::hypot(params[0], params[1]);
    case PrimitiveKind::Capsule: return params[0] + params[1];
  }
  return 0.0;
}

double SdfPrimitive::half_height_z() const {
  // Support function of the posed shape along world z.
  const Vec3 a = rotation.transpose() * Vec3::UnitZ();
  switch (kind) {
    case PrimitiveKind::Sphere: return params[0];
    case PrimitiveKind::Box:
      return std::abs(a.x()) * params[0] + std::abs(a.y()) * params[1] + std::abs(a.z()) * params[2];
    case PrimitiveKind::Cylinder:
      return params[0] * std::hypot(a.x(), a.y()) + params[1] * std::abs(a.z());
    case PrimitiveKind::Capsule: return params[0] + params[1] * std::abs(a.z());
  }
  return 0.0;
}

SdfPrimitive make_primitive(PrimitiveKind kind, const Vec3& center, const Quaternion& q,
                            std::vector<double> params) {
  if (static_cast<int>(params.size()) != kind_param_count(kind)) {
    throw std::invalid_argument(std::string("wrong parameter count for ") + kind_name(kind));
  }
  for (double v : params) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("shape parameters must be positive");
  }
  SdfPrimitive p;
  p.kind = kind;
  p.center = center;
  p.params = std::move(params);
  p.set_orientation(q);
  return p;
}

Camera look_at(const Vec3& eye, const Vec3& target) {
  Camera c;
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
  x.normalize();
  Mat3 R;
  R.col(0) = x;
  R.col(1) = z.cross(x);
  R.col(2) = z;
  // Stored as a quaternion so a text round trip reproduces the same matrix.
  c.set_orientation(matrix_to_quat(R));
  c.position = eye;
  return c;
}

double SdfScene::object_sdf(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& o : objects) d = std::min(d, o.sdf(x));
  return d;
}

double scene_sdf(const SdfScene& scene, const Vec3& x) {
  double d = scene.object_sdf(x);
  if (scene.has_table) d = std::min(d, x.z() - scene.table_height);
  return d;
}

Vec3 scene_normal(const SdfScene& scene, const Vec3& x, double h) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    g[k] = scene_sdf(scene, x + e) - scene_sdf(scene, x - e);
  }
  const double n = g.norm();
  return n > 0.0 ? Vec3(g / n) : Vec3::Zero();
}

namespace {

// Primitives keep the quaternion as the source of truth so that a reload
// from text rebuilds the identical matrix.
Quaternion canonical_quat(const Mat3& R) { return matrix_to_quat(R); }

SdfPrimitive random_primitive(Rng& rng) {
  const auto kind = static_cast<PrimitiveKind>(rng.index(4));
  const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Mat3 tilt = Mat3::Identity();
  std::vector<double> params;
  switch (kind) {
    case PrimitiveKind::Sphere:
      params = {rng.uniform(0.02, 0.045)};
      break;
    case PrimitiveKind::Box:
      params = {rng.uniform(0.015, 0.045), rng.uniform(0.015, 0.045), rng.uniform(0.015, 0.05)};
      break;
    case PrimitiveKind::Cylinder:
      params = {rng.uniform(0.015, 0.04), rng.uniform(0.02, 0.06)};
      if (rng.uniform() < 0.5) tilt = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitX()).toRotationMatrix();
      break;
    case PrimitiveKind::Capsule:
      params = {rng.uniform(0.012, 0.03), rng.uniform(0.015, 0.045)};
      if (rng.uniform() < 0.5) tilt = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitX()).toRotationMatrix();
      break;
  }
  const Mat3 R = rot_z(yaw) * tilt;
  return make_primitive(kind, Vec3::Zero(), canonical_quat(R), std::move(params));
}

Camera camera_on_sphere(const Vec3& target, double distance, double elevation, double azimuth) {
  const Vec3 eye = target + distance * Vec3(std::cos(elevation) * std::cos(azimuth),
                                            std::cos(elevation) * std::sin(azimuth),
                                            std::sin(elevation));
  return look_at(eye, target);
}

const Vec3 kLookTarget(0.0, 0.0, 0.03);

}  // namespace

SdfScene generate_scene(std::uint64_t seed) {
  Rng rng(seed);
  SdfScene scene;
  scene.rng_seed = seed;
  scene.has_table = true;
  scene.table_height = 0.0;
  const int target = 3 + static_cast<int>(rng.index(6));
  int attempts = 0;
  while (static_cast<int>(scene.objects.size()) < target && attempts < 2000) {
    ++attempts;
    SdfPrimitive p = random_primitive(rng);
    const double x = rng.uniform(-0.18, 0.18), y = rng.uniform(-0.18, 0.18);
    p.center = Vec3(x, y, scene.table_height + p.half_height_z());
    bool ok = true;
    for (const auto& o : scene.objects) {
      if ((o.center - p.center).norm() < o.bounding_radius() + p.bounding_radius() + 0.005) {
        ok = false;
        break;
      }
    }
    if (ok) scene.objects.push_back(std::move(p));
  }
  if (scene.objects.size() < 3) throw std::runtime_error("scene generation failed to place objects");

  const double elevation = (55.0 + rng.uniform(-8.0, 8.0)) * std::numbers::pi / 180.0;
  const double azimuth = (-90.0 + rng.uniform(-20.0, 20.0)) * std::numbers::pi / 180.0;
  const double distance = 0.7 + rng.uniform(-0.05, 0.05);
  scene.camera = camera_on_sphere(kLookTarget, distance, elevation, azimuth);
  return scene;
}

bool OccupancyGrid::occupied_at(const Vec3& p) const {
  const Vec3 f = (p - origin) / voxel_size;
  if ((f.array() < 0.0).any()) return false;
  const auto i = static_cast<std::uint64_t>(f.x()), j = static_cast<std::uint64_t>(f.y()),
             k = static_cast<std::uint64_t>(f.z());
  if (i >= dims[0] || j >= dims[1] || k >= dims[2]) return false;
  return occupancy[linear(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                          static_cast<std::uint32_t>(k))] != 0;
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (auto b : occupancy) n += b != 0;
  return n;
}

OccupancyGrid ground_truth_occupancy(const SdfScene& scene, double voxel_size, int threads) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_size must be > 0");
  OccupancyGrid g;
  g.origin = scene.bounds.lo;
  g.voxel_size = voxel_size;
  double total = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double n = std::ceil((scene.bounds.hi[k] - scene.bounds.lo[k]) / voxel_size - 1e-9);
    total *= std::max(n, 1.0);
    if (total > 1e8) throw std::invalid_argument("grid too large");
    g.dims[k] = static_cast<std::uint32_t>(std::max(n, 1.0));
  }
  g.occupancy.assign(g.voxel_count(), 0);
  parallel_for(g.dims[2], threads, [&](std::size_t kk) {
    const auto k = static_cast<std::uint32_t>(kk);
    for (std::uint32_t j = 0; j < g.dims[1]; ++j)
      for (std::uint32_t i = 0; i < g.dims[0]; ++i)
        g.occupancy[g.linear(i, j, k)] = scene_sdf(scene, g.center(i, j, k)) <= 0.0 ? 1 : 0;
  });
  return g;
}

namespace {

bool ray_box(const Aabb& box, const Vec3& o, const Vec3& d, double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < box.lo[k] || o[k] > box.hi[k]) return false;
      continue;
    }
    double a = (box.lo[k] - o[k]) / d[k], b = (box.hi[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t0 <= t1;
}

}  // namespace

DepthImage render_depth(const SdfScene& scene, const Camera& cam, int threads) {
  DepthImage depth(static_cast<std::size_t>(cam.width) * cam.height, 0.0);
  parallel_for(static_cast<std::size_t>(cam.height), threads, [&](std::size_t row) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dc = cam.unproject(u, static_cast<double>(row), 1.0).normalized();
      const Vec3 dw = cam.rotation * dc;
      double t, t_exit;
      if (!ray_box(scene.bounds, cam.position, dw, t, t_exit)) continue;
      for (int step = 0; step < 256 && t <= t_exit; ++step) {
        const double s = scene_sdf(scene, cam.position + t * dw);
        if (std::abs(s) < 1e-5) {
          depth[row * cam.width + u] = t * dc.z();
          break;
        }
        // Entering the bounds inside material (the table slab's clipped side).
        if (s < 0.0) break;
        t += s;
      }
    }
  });
  return depth;
}

PointCloud depth_to_pointcloud(const DepthImage& depth, const Camera& cam) {
  if (depth.size() != static_cast<std::size_t>(cam.width) * cam.height) {
    throw std::invalid_argument("depth image does not match camera resolution");
  }
  PointCloud out;
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u) {
      const double d = depth[static_cast<std::size_t>(v) * cam.width + u];
      if (d != 0.0) out.push_back(cam.unproject(u, v, d));
    }
  return out;
}

PointCloud merge_views(const std::vector<PointCloud>& clouds, const std::vector<Camera>& poses) {
  if (clouds.size() != poses.size()) throw std::invalid_argument("merge_views: mismatched list lengths");
  PointCloud out;
  for (std::size_t i = 0; i < clouds.size(); ++i)
    for (const auto& p : clouds[i]) out.push_back(poses[i].to_world(p));
  return out;
}

std::vector<Camera> select_views(const SdfScene& scene, int count) {
  if (count < 1) throw std::invalid_argument("view count must be >= 1");
  std::vector<Camera> ring{scene.camera};
  const double distance = (scene.camera.position - kLookTarget).norm();
  for (double elev_deg : {35.0, 50.0, 65.0}) {
    for (int a = 0; a < 21; ++a) {
      const double az = 2.0 * std::numbers::pi * a / 21.0;
      ring.push_back(camera_on_sphere(kLookTarget, distance, elev_deg * std::numbers::pi / 180.0, az));
    }
  }
  if (static_cast<std::size_t>(count) > ring.size()) throw std::invalid_argument("too many views requested");
  std::vector<Vec3> eyes;
  for (const auto& c : ring) eyes.push_back(c.position);
  std::vector<Camera> out;
  for (std::size_t i : farthest_point_sample(eyes, static_cast<std::size_t>(count))) out.push_back(ring[i]);
  return out;
}

PointCloud observe(const SdfScene& scene, int views, int threads) {
  const auto cams = select_views(scene, views);
  std::vector<PointCloud> clouds;
  for (const auto& c : cams) clouds.push_back(depth_to_pointcloud(render_depth(scene, c, threads), c));
  return merge_views(clouds, cams);
}

}  // namespace occugrasp
