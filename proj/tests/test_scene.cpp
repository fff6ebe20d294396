#include "doctest.h"
#include "occugrasp/oracle.hpp"
#include "occugrasp/rng.hpp"
#include "occugrasp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace occugrasp;

namespace {

SdfScene bare_scene() {
  SdfScene s;
  s.has_table = false;
  s.bounds = {Vec3(-2, -2, -2), Vec3(2, 2, 2)};
  return s;
}

SdfPrimitive sphere(const Vec3& c, double r) { return make_primitive(PrimitiveKind::Sphere, c, {}, {r}); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("occugrasp_test_" + name)).string();
}

Camera axis_camera() {
  Camera c;
  c.rotation = Mat3::Identity();
  c.position = Vec3::Zero();
  return c;
}

}  // namespace

TEST_CASE("primitive SDF values") {
  SdfScene s = bare_scene();
  s.objects.push_back(sphere(Vec3::Zero(), 1.0));
  CHECK(scene_sdf(s, Vec3::Zero()) == -1.0);
  CHECK(scene_sdf(s, Vec3(2, 0, 0)) == 1.0);

  const auto box = make_primitive(PrimitiveKind::Box, Vec3(1, 2, 3), {}, {0.1, 0.2, 0.3});
  CHECK(box.sdf(Vec3(1, 2, 3)) == doctest::Approx(-0.1));
  CHECK(box.sdf(Vec3(1.5, 2, 3)) == doctest::Approx(0.4));
  CHECK(box.sdf(Vec3(1.4, 2.6, 3)) == doctest::Approx(std::hypot(0.3, 0.4)));

  const auto cyl = make_primitive(PrimitiveKind::Cylinder, Vec3::Zero(), {}, {0.1, 0.2});
  CHECK(cyl.sdf(Vec3(0, 0, 0)) == doctest::Approx(-0.1));
  CHECK(cyl.sdf(Vec3(0, 0, 0.5)) == doctest::Approx(0.3));
  CHECK(cyl.sdf(Vec3(0.4, 0, 0.6)) == doctest::Approx(0.5));

  const auto cap = make_primitive(PrimitiveKind::Capsule, Vec3::Zero(), {}, {0.1, 0.2});
  CHECK(cap.sdf(Vec3(0, 0, 0.5)) == doctest::Approx(0.2));
  CHECK(cap.sdf(Vec3(0.3, 0, 0.1)) == doctest::Approx(0.2));

  CHECK_THROWS(make_primitive(PrimitiveKind::Box, Vec3::Zero(), {}, {0.1, -0.1, 0.1}));
}

TEST_CASE("rotated primitive equals rotated query") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    q = q.normalized();
    const auto b = make_primitive(PrimitiveKind::Box, Vec3(0.1, 0.2, 0.3), q, {0.05, 0.02, 0.03});
    const auto axis = make_primitive(PrimitiveKind::Box, Vec3::Zero(), {}, {0.05, 0.02, 0.03});
    const Vec3 x(rng.normal(), rng.normal(), rng.normal());
    CHECK(b.sdf(x) == doctest::Approx(axis.sdf(quat_to_matrix(q).transpose() * (x - Vec3(0.1, 0.2, 0.3)))));
    CHECK(b.sdf(b.center + 10 * b.bounding_radius() * x.normalized()) > 0.0);
  }
}

TEST_CASE("scene SDF is the minimum over objects") {
  SdfScene s = bare_scene();
  s.objects.push_back(sphere(Vec3(0.1, 0, 0), 0.05));
  s.objects.push_back(sphere(Vec3(-0.1, 0.02, 0), 0.07));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 x(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    const double a = (x - Vec3(0.1, 0, 0)).norm() - 0.05;
    const double b = (x - Vec3(-0.1, 0.02, 0)).norm() - 0.07;
    CHECK(std::abs(scene_sdf(s, x) - std::min(a, b)) < 1e-15);
  }
}

TEST_CASE("ground truth occupancy") {
  SdfScene s = bare_scene();
  s.bounds = {Vec3(-0.1, -0.1, -0.1), Vec3(0.1, 0.1, 0.1)};
  const Vec3 c(0.003, -0.002, 0.001);
  s.objects.push_back(sphere(c, 0.05));
  const OccupancyGrid g = ground_truth_occupancy(s, 0.01);
  CHECK(g.dims == std::array<std::uint32_t, 3>{20, 20, 20});
  std::size_t brute = 0;
  for (int k = 0; k < 20; ++k)
    for (int j = 0; j < 20; ++j)
      for (int i = 0; i < 20; ++i) {
        const Vec3 p = Vec3(-0.1, -0.1, -0.1) + 0.01 * Vec3(i + 0.5, j + 0.5, k + 0.5);
        brute += (p - c).norm() <= 0.05;
      }
  CHECK(g.occupied_count() == brute);

  SdfScene empty;
  empty.bounds = {Vec3(-0.1, -0.1, 0.01), Vec3(0.1, 0.1, 0.2)};
  CHECK(ground_truth_occupancy(empty, 0.01).occupied_count() == 0);

  SdfScene gen = generate_scene(3);
  SdfScene rev = gen;
  std::reverse(rev.objects.begin(), rev.objects.end());
  CHECK(ground_truth_occupancy(gen, 0.01).occupancy == ground_truth_occupancy(rev, 0.01).occupancy);
  CHECK(ground_truth_occupancy(gen, 0.01, 1).occupancy == ground_truth_occupancy(gen, 0.01, 3).occupancy);

  SdfScene huge;
  huge.bounds = {Vec3(0, 0, 0), Vec3(100, 100, 100)};
  CHECK_THROWS_WITH(ground_truth_occupancy(huge, 0.01), "grid too large");
}

TEST_CASE("render depth of a sphere on the optical axis") {
  SdfScene s = bare_scene();
  s.objects.push_back(sphere(Vec3(0, 0, 1), 0.1));
  const Camera cam = axis_camera();
  const DepthImage d = render_depth(s, cam);
  const double center = d[48 * 128 + 64];
  CHECK(std::abs(center - 0.9) < 1e-3);
  // Analytic ray/sphere intersection for every pixel.
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir = cam.unproject(u, v, 1.0).normalized();
      const Vec3 oc = -Vec3(0, 0, 1);
      const double b = oc.dot(dir), cc = oc.squaredNorm() - 0.01, disc = b * b - cc;
      const double got = d[v * cam.width + u];
      if (disc > 1e-4) {
        const double t = -b - std::sqrt(disc);
        CHECK(std::abs(got - t * dir.z()) < 1e-3);
      } else if (disc < -1e-4) {
        CHECK(got == 0.0);
      }
    }
}

TEST_CASE("render misses and surface consistency") {
  SdfScene empty = bare_scene();
  Camera cam = look_at(Vec3(0, -1, 0.2), Vec3(0, 0, 0.2));
  const DepthImage d = render_depth(empty, cam);
  CHECK(std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; }));

  const SdfScene s = generate_scene(11);
  const DepthImage img = render_depth(s, s.camera);
  std::size_t hits = 0;
  for (int v = 0; v < s.camera.height; ++v)
    for (int u = 0; u < s.camera.width; ++u) {
      const double z = img[v * s.camera.width + u];
      if (z == 0.0) continue;
      ++hits;
      const double sd = scene_sdf(s, s.camera.to_world(s.camera.unproject(u, v, z)));
      CHECK(sd > -1e-3);
      CHECK(sd < 1e-3);
    }
  CHECK(hits > 1000);
  CHECK(render_depth(s, s.camera, 1) == render_depth(s, s.camera, 4));
}

TEST_CASE("depth to point cloud") {
  Camera cam = axis_camera();
  DepthImage d(cam.width * cam.height, 0.0);
  CHECK(depth_to_pointcloud(d, cam).empty());
  d[48 * 128 + 64] = 1.0;
  const PointCloud pc = depth_to_pointcloud(d, cam);
  REQUIRE(pc.size() == 1);
  CHECK((pc[0] - Vec3(0, 0, 1)).norm() == 0.0);
  for (int u : {0, 17, 127})
    for (double z : {0.3, 1.7}) {
      const Vec3 p = cam.project(cam.unproject(u, 5, z));
      CHECK(std::abs(p.x() - u) < 1e-6);
      CHECK(std::abs(p.y() - 5) < 1e-6);
      CHECK(std::abs(p.z() - z) < 1e-6);
    }
}

TEST_CASE("merge views") {
  const PointCloud a{{0, 0, 1}, {0.1, 0.2, 0.9}};
  CHECK(merge_views({a}, {axis_camera()}) == a);
  CHECK(merge_views({a, a}, {axis_camera(), axis_camera()}).size() == 4);
  CHECK_THROWS(merge_views({a}, {}));

  SdfScene s = bare_scene();
  s.objects.push_back(sphere(Vec3::Zero(), 0.1));
  const Camera c1 = look_at(Vec3(0, -1, 0), Vec3::Zero());
  const Camera c2 = look_at(Vec3(0, 1, 0), Vec3::Zero());
  const PointCloud m = merge_views({depth_to_pointcloud(render_depth(s, c1), c1),
                                    depth_to_pointcloud(render_depth(s, c2), c2)},
                                   {c1, c2});
  double min_dot = 1.0;
  for (const auto& p : m)
    for (const auto& q : m) min_dot = std::min(min_dot, p.normalized().dot(q.normalized()));
  CHECK(min_dot < -0.9);
}

TEST_CASE("generated scenes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SdfScene s = generate_scene(seed);
    CHECK(s.objects.size() >= 3);
    CHECK(s.objects.size() <= 8);
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& o = s.objects[i];
      const Vec3 r = Vec3::Constant(o.bounding_radius());
      CHECK(s.bounds.contains(o.center + r));
      CHECK(s.bounds.contains(o.center - r));
      CHECK(std::abs(o.center.z() - o.half_height_z()) < 1e-12);
      for (std::size_t j = i + 1; j < s.objects.size(); ++j)
        CHECK((o.center - s.objects[j].center).norm() >=
              o.bounding_radius() + s.objects[j].bounding_radius() + 0.005 - 1e-12);
    }
    CHECK(scene_sdf(s, s.camera.position) > 0.0);
  }
  CHECK(scene_to_text(generate_scene(5)) == scene_to_text(generate_scene(5)));
}

TEST_CASE("observed points lie on occupied voxels") {
  const SdfScene s = generate_scene(21);
  const OccupancyGrid g = ground_truth_occupancy(s, 0.01);
  const PointCloud pc = observe(s, 3);
  CHECK(pc.size() > 1000);
  for (const auto& p : pc) {
    bool near = false;
    for (int dz = -1; dz <= 1 && !near; ++dz)
      for (int dy = -1; dy <= 1 && !near; ++dy)
        for (int dx = -1; dx <= 1 && !near; ++dx) near = g.occupied_at(p + 0.01 * Vec3(dx, dy, dz));
    CHECK(near);
  }
}

TEST_CASE("view selection") {
  const SdfScene s = generate_scene(2);
  const auto one = select_views(s, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].position == s.camera.position);
  const auto three = select_views(s, 3);
  CHECK(three.size() == 3);
  std::vector<PointCloud> clouds;
  std::size_t sum = 0;
  for (const auto& c : three) {
    clouds.push_back(depth_to_pointcloud(render_depth(s, c), c));
    sum += clouds.back().size();
  }
  CHECK(observe(s, 3).size() == sum);
}

TEST_CASE("scene text and OCC1 round trips") {
  const SdfScene s = generate_scene(9);
  const std::string path = temp_path("scene.txt");
  write_scene(path, s);
  const SdfScene r = read_scene(path);
  CHECK(scene_to_text(r) == scene_to_text(s));
  REQUIRE(r.objects.size() == s.objects.size());
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    CHECK(r.objects[i].rotation == s.objects[i].rotation);
    CHECK(r.objects[i].center == s.objects[i].center);
  }
  CHECK(r.camera.rotation == s.camera.rotation);
  CHECK_THROWS_AS(scene_from_text("blob 1 2 3"), FormatError);

  const OccupancyGrid g = ground_truth_occupancy(s, 0.01);
  const std::string op = temp_path("grid.occ");
  write_occ1(op, g);
  const OccupancyGrid h = read_occ1(op);
  CHECK(h.dims == g.dims);
  CHECK(h.occupancy == g.occupancy);
  CHECK(std::abs(h.voxel_size - 0.01) < 1e-7);
  std::filesystem::remove(path);
  std::filesystem::remove(op);
}

TEST_CASE("grasp oracle examples") {
  SdfScene s = bare_scene();
  s.objects.push_back(sphere(Vec3::Zero(), 0.03));
  // Approach straight down onto the top of the sphere; fingertip line through the center.
  GraspPose pose;
  pose.p_g = Vec3(0, 0, 0.03 + 0.03);
  pose.R_g = frame_from_direction(Vec3(0, 0, -1));
  pose.depth_idx = 5;  // depth 0.06 puts the closing line through the center
  pose.width = 0.07;
  // Analytic normals at the contacts are exactly antipodal along the closing axis.
  const Vec3 c = pose.rotation().col(0);
  CHECK((Vec3(0, 0, 0) - 0.03 * c).normalized().dot(-c) == doctest::Approx(1.0));
  CHECK(grasp_oracle(s, pose, 1.0));
  CHECK(oracle_detail(s, pose).max_contact_angle < 1e-3);

  GraspPose narrow = pose;
  narrow.width = 0.04;
  CHECK_FALSE(grasp_oracle(s, narrow, 1.0));

  GraspPose tangent = pose;
  tangent.p_g = Vec3(0, 0.03, 0.06);  // closing line grazes the sphere
  CHECK_FALSE(grasp_oracle(s, tangent, 0.2));

  GraspPose bad = pose;
  bad.width = std::nan("");
  CHECK_THROWS(grasp_oracle(s, bad, 1.0));
}

TEST_CASE("oracle is monotone in friction") {
  Rng rng(17);
  const SdfScene s = generate_scene(4);
  int successes = 0;
  for (int t = 0; t < 400; ++t) {
    const auto& o = s.objects[rng.index(s.objects.size())];
    GraspPose p;
    const Vec3 dir = Vec3(rng.normal(), rng.normal(), -std::abs(rng.normal())).normalized();
    p.R_g = frame_from_direction(dir);
    p.rot_idx = static_cast<int>(rng.index(12));
    p.depth_idx = static_cast<int>(rng.index(4));
    p.p_g = o.center - dir * (o.bounding_radius() * rng.uniform(0.3, 1.0));
    p.width = rng.uniform(0.02, 0.1);
    bool prev = false;
    for (double mu : {0.2, 0.4, 0.6, 0.8, 1.0, 1.2}) {
      const bool ok = grasp_oracle(s, p, mu);
      if (prev) CHECK(ok);
      prev = ok;
      CHECK(ok == detail_success(oracle_detail(s, p), mu));
    }
    successes += prev;
  }
  CHECK(successes > 0);
}

TEST_CASE("collision detection samples") {
  SdfScene s = bare_scene();
  s.objects.push_back(sphere(Vec3::Zero(), 0.03));
  OrientedBox box{Vec3(0.2, 0, 0), Mat3::Identity(), Vec3(0.01, 0.01, 0.01)};
  CHECK(box_clear(s, box, 0.005));
  box.center = Vec3(0.035, 0, 0);
  CHECK_FALSE(box_clear(s, box, 0.005));
  CHECK(box_samples(box, 0.005).size() == 5 * 5 * 5);
}
