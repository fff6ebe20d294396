#include "doctest.h"
#include "occugrasp/dataset.hpp"
#include "occugrasp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace occugrasp;

namespace {

std::filesystem::path temp_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("scene seeds differ across indices and base seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::size_t i = 0; i < 50; ++i) seen.insert(scene_seed(s, i));
  CHECK(seen.size() == 200);
}

TEST_CASE("records are reproducible and survive a disk round trip") {
  GenOptions opt;
  const auto a = generate_records(21, 3, opt);
  const auto b = generate_records(21, 3, opt);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].observed == b[i].observed);
    CHECK(a[i].occupancy.occupancy == b[i].occupancy.occupancy);
  }
  CHECK(a[0].name == "scene_0000");
  CHECK(a[0].observed != a[1].observed);

  const auto dir = temp_dir("occugrasp_records");
  write_records(dir.string(), a);
  const auto c = read_records(dir.string());
  REQUIRE(c.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(c[i].name == a[i].name);
    CHECK(c[i].observed == a[i].observed);
    CHECK(c[i].occupancy.dims == a[i].occupancy.dims);
    CHECK(c[i].occupancy.occupancy == a[i].occupancy.occupancy);
    CHECK(c[i].scene.objects.size() == a[i].scene.objects.size());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("reading a missing directory is an IO error") {
  CHECK_THROWS_AS(read_records("/nonexistent/occugrasp"), IoError);
}

TEST_CASE("more views observe more of the scene") {
  GenOptions one, three;
  three.views = 3;
  const auto a = generate_record(5, 0, one);
  const auto b = generate_record(5, 0, three);
  CHECK(b.observed.size() > a.observed.size());
  CHECK(a.occupancy.occupancy == b.occupancy.occupancy);
}

TEST_CASE("network clouds have fixed size and seeded noise") {
  const auto r = generate_record(9, 0, GenOptions{});
  const auto a = network_cloud(r, 700);
  CHECK(a.size() == 700);
  CHECK(network_cloud(r, 700) == a);
  const auto n1 = network_cloud(r, 700, 0.02, 0.3, 4);
  const auto n2 = network_cloud(r, 700, 0.02, 0.3, 4);
  CHECK(n1 == n2);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < a.size(); ++i) moved += (a[i] != n1[i]);
  CHECK(moved == 210);
}

TEST_CASE("affordance directions are 26 distinct unit vectors") {
  const auto d = affordance_directions();
  REQUIRE(d.size() == 26);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::abs(d[i].norm() - 1.0) < 1e-12);
    for (std::size_t j = 0; j < i; ++j) CHECK((d[i] - d[j]).norm() > 0.1);
  }
}

TEST_CASE("point labels agree with direct oracle calls") {
  const auto r = generate_record(31, 0, GenOptions{});
  const GraspRegionSpec spec;
  const GripperBody body;
  const auto dirs = fibonacci_sphere(8);
  const auto cloud = network_cloud(r, 256);
  int checked = 0;
  for (std::size_t i = 0; i < cloud.size() && checked < 6; i += 17) {
    const PointLabels l = point_labels(r.scene, cloud[i], dirs, spec, body);
    for (std::size_t v = 0; v < dirs.size(); ++v) {
      int hits = 0;
      for (int rot = 0; rot < kRotationBins; ++rot) {
        for (int depth = 0; depth < kDepthBins; ++depth) {
          GraspPose pose;
          pose.p_g = cloud[i];
          pose.R_g = frame_from_direction(dirs[v]);
          pose.rot_idx = rot;
          pose.depth_idx = depth;
          const auto w = label_width(r.scene, pose, spec);
          bool ok = false;
          if (w) {
            pose.width = *w;
            ok = grasp_oracle(r.scene, pose, kLabelFriction, body, spec);
          }
          const std::size_t cell = v * kPoseCells + static_cast<std::size_t>(rot * kDepthBins + depth);
          CHECK(l.success[cell] == (ok ? 1.0 : 0.0));
          if (ok) CHECK(l.width[cell] == *w);
          hits += ok;
        }
      }
      CHECK(l.view[v] == static_cast<double>(hits) / kPoseCells);
    }
    const double top = *std::max_element(l.view.begin(), l.view.end());
    CHECK(l.view[static_cast<std::size_t>(l.best)] == top);
    CHECK(std::find(l.view.begin(), l.view.end(), top) - l.view.begin() == l.best);
    ++checked;
  }
}

TEST_CASE("affordance label is any success over the 26 directions") {
  const auto r = generate_record(32, 0, GenOptions{});
  const GraspRegionSpec spec;
  const GripperBody body;
  const auto cloud = network_cloud(r, 200);
  const auto dirs = affordance_directions();
  int positives = 0;
  for (std::size_t i = 0; i < cloud.size(); i += 7) {
    const PointLabels l = point_labels(r.scene, cloud[i], dirs, spec, body);
    const bool any = std::any_of(l.success.begin(), l.success.end(), [](double s) { return s > 0.5; });
    CHECK(affordance_label(r.scene, cloud[i], spec, body) == any);
    positives += any;
  }
  MESSAGE("positives: " << positives);
}

TEST_CASE("labeled scenes memoize point labels") {
  const auto r = generate_record(33, 0, GenOptions{});
  LabeledScene s(r, 128, fibonacci_sphere(6), GraspRegionSpec{}, GripperBody{});
  CHECK(s.cloud().size() == 128);
  CHECK(s.affordance().size() == 128);
  for (std::size_t i : s.area()) CHECK(s.affordance()[i] == 1.0);
  const PointLabels& a = s.labels(5);
  const PointLabels& b = s.labels(5);
  CHECK(&a == &b);
  CHECK_THROWS(s.labels(128));
}
