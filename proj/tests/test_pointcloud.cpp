#include "doctest.h"
#include "occugrasp/pointcloud.hpp"
#include "occugrasp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>

using namespace occugrasp;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.emplace_back(scale * rng.uniform(), scale * rng.uniform(), scale * rng.uniform());
  return c;
}

std::vector<std::tuple<double, double, double>> as_sorted(const PointCloud& c) {
  std::vector<std::tuple<double, double, double>> v;
  for (const auto& p : c) v.emplace_back(p.x(), p.y(), p.z());
  std::sort(v.begin(), v.end());
  return v;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("occugrasp_test_" + name)).string();
}

}  // namespace

TEST_CASE("sample_fixed") {
  const PointCloud five = random_cloud(5, 1);
  CHECK(as_sorted(sample_fixed(five, 5, 3)) == as_sorted(five));
  const PointCloud big = random_cloud(20000, 2);
  CHECK(as_sorted(sample_fixed(big, 20000, 4)) == as_sorted(big));
  const PointCloud hundred = random_cloud(100, 3);
  const PointCloud a = sample_fixed(hundred, 50, 77), b = sample_fixed(hundred, 50, 77);
  CHECK(a == b);
  const auto sorted = as_sorted(a);
  CHECK(std::set(sorted.begin(), sorted.end()).size() == 50);
  CHECK(sample_fixed(five, 12, 1).size() == 12);
  CHECK_THROWS(sample_fixed({}, 3, 1));
}

TEST_CASE("farthest point sampling") {
  const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {10, 0, 0}};
  // Brute force: the point farthest from index 0.
  std::size_t far = 0;
  for (std::size_t i = 1; i < line.size(); ++i)
    if ((line[i] - line[0]).norm() > (line[far] - line[0]).norm()) far = i;
  CHECK(farthest_point_sample(line, 2) == std::vector<std::size_t>{0, far});
  CHECK(farthest_point_sample(line, 1) == std::vector<std::size_t>{0});
  auto all = farthest_point_sample(line, 4);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS(farthest_point_sample(line, 5));

  // Against a direct recomputation of max-min distance at every step.
  const PointCloud c = random_cloud(60, 9);
  const auto got = farthest_point_sample(c, 20);
  std::vector<std::size_t> expect{0};
  while (expect.size() < 20) {
    std::size_t best = 0;
    double best_d = -1;
    for (std::size_t i = 0; i < c.size(); ++i) {
      double m = 1e300;
      for (auto j : expect) m = std::min(m, (c[i] - c[j]).squaredNorm());
      if (m > best_d) {
        best_d = m;
        best = i;
      }
    }
    expect.push_back(best);
  }
  CHECK(got == expect);
}

TEST_CASE("normalize_unit_cube") {
  auto [n, a] = normalize_unit_cube({{0, 0, 0}, {2, 4, 8}});
  CHECK(n[0] == Vec3(0, 0, 0));
  CHECK(n[1] == Vec3(1, 1, 1));
  const PointCloud unit{{0, 0, 0}, {1, 1, 1}, {0.25, 0.5, 0.75}};
  CHECK(normalize_unit_cube(unit).first == unit);

  const PointCloud c = random_cloud(500, 5, 3.0);
  auto [m, aff] = normalize_unit_cube(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK((aff.invert(m[i]) - c[i]).norm() < 1e-9);
    CHECK(m[i].minCoeff() >= 0.0);
    CHECK(m[i].maxCoeff() <= 1.0);
  }
  // Degenerate axis lands on 0.5.
  auto [flat, fa] = normalize_unit_cube({{0, 1, 2}, {1, 1, 3}});
  CHECK(flat[0].y() == 0.5);
  CHECK(flat[1].y() == 0.5);
}

TEST_CASE("gaussian noise") {
  const PointCloud c = random_cloud(10000, 6);
  CHECK(add_gaussian_noise(c, 0.0, 0.3, 1) == c);
  CHECK(add_gaussian_noise(c, 0.02, 0.0, 1) == c);
  const PointCloud noisy = add_gaussian_noise(c, 0.02, 0.3, 1);
  std::size_t changed = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(noisy[i] == c[i])) {
      ++changed;
      mean += (noisy[i] - c[i]).norm();
    }
  }
  CHECK(changed == 3000);
  mean /= static_cast<double>(changed);
  // Independent simulation of the norm of a 3-D isotropic normal.
  Rng sim(12345);
  double sim_mean = 0.0;
  const int trials = 200000;
  for (int t = 0; t < trials; ++t) {
    const double x = sim.normal(), y = sim.normal(), z = sim.normal();
    sim_mean += 0.02 * std::sqrt(x * x + y * y + z * z);
  }
  sim_mean /= trials;
  CHECK(std::abs(mean - sim_mean) / sim_mean < 0.05);
  CHECK(add_gaussian_noise(c, 0.02, 0.3, 1) == noisy);
}

TEST_CASE("voxel downsample") {
  auto one = voxel_downsample({{0.001, 0.001, 0.001}, {0.003, 0.003, 0.003}}, 0.005);
  REQUIRE(one.size() == 1);
  CHECK((one[0] - Vec3(0.002, 0.002, 0.002)).norm() < 1e-15);
  const PointCloud spread{{0, 0, 0}, {0.01, 0.01, 0.01}, {0.02, 0.02, 0.02}};
  CHECK(voxel_downsample(spread, 0.005).size() == 3);

  const PointCloud c = random_cloud(3000, 7, 0.1);
  std::set<std::tuple<long, long, long>> keys;
  for (const auto& p : c)
    keys.emplace(static_cast<long>(std::floor(p.x() / 0.005)), static_cast<long>(std::floor(p.y() / 0.005)),
                 static_cast<long>(std::floor(p.z() / 0.005)));
  const PointCloud d = voxel_downsample(c, 0.005);
  CHECK(d.size() == keys.size());
  CHECK(voxel_downsample(d, 0.005).size() == d.size());

  const PointCloud cent = voxel_neighborhood_centroids(c, 0.005);
  for (std::size_t i = 0; i < 50; ++i) {
    Vec3 s = Vec3::Zero();
    int n = 0;
    for (const auto& q : c) {
      if (voxel_key(q, 0.005) == voxel_key(c[i], 0.005)) {
        s += q;
        ++n;
      }
    }
    CHECK((cent[i] - s / n).norm() < 1e-12);
  }
}

TEST_CASE("PCB1 round trip and malformed input") {
  const PointCloud c = random_cloud(17, 8);
  const std::string p = temp_path("c.pcb");
  write_pcb1(p, c);
  const PointCloud r = read_pcb1(p);
  REQUIRE(r.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK((r[i] - c[i]).norm() < 1e-6);
  {
    std::ofstream bad(p, std::ios::binary | std::ios::trunc);
    bad << "PCB1xx";
  }
  CHECK_THROWS_AS(read_pcb1(p), FormatError);
  CHECK_THROWS_AS(read_pcb1(temp_path("does_not_exist")), IoError);
  std::filesystem::remove(p);
}
