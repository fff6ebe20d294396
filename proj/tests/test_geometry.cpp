#include "doctest.h"
#include "occugrasp/geometry.hpp"
#include "occugrasp/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace occugrasp;

namespace {

Quaternion random_unit(Rng& rng) {
  Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return q.normalized();
}

using Q4 = std::array<double, 4>;

Q4 hamilton(const Q4& a, const Q4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

// Rotates v by the sandwich q* v q, which is what the frame matrix encodes.
Vec3 sandwich(const Quaternion& q, const Vec3& v) {
  const Q4 qq{q.s, q.vx, q.vy, q.vz};
  const Q4 qc{q.s, -q.vx, -q.vy, -q.vz};
  const Q4 r = hamilton(hamilton(qc, {0, v.x(), v.y(), v.z()}), qq);
  return {r[1], r[2], r[3]};
}

}  // namespace

TEST_CASE("slerp with one frame returns the first endpoint") {
  const auto [q1, q2] = default_endpoints();
  const FrameSet f = slerp_frames(q1, q2, 1);
  REQUIRE(f.K == 1);
  REQUIRE(f.quaternions.size() == 1);
  CHECK(f.quaternions[0].s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((f.rotations[0] - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("slerp midpoint for orthogonal endpoints") {
  const auto [q1, q2] = default_endpoints();
  const FrameSet f = slerp_frames(q1, q2, 2);
  // phi = pi/2, t = 1/2: sin(pi/4) (q1 + q2) / sin(pi/2)
  const double w = std::sin(std::numbers::pi / 4.0);
  const Quaternion expect{w * (q1.s + q2.s), w * (q1.vx + q2.vx), w * (q1.vy + q2.vy),
                          w * (q1.vz + q2.vz)};
  const Quaternion& got = f.quaternions[1];
  CHECK(got.s == doctest::Approx(expect.s).epsilon(1e-12));
  CHECK(got.vx == doctest::Approx(expect.vx).epsilon(1e-12));
  CHECK(got.vy == doctest::Approx(expect.vy).epsilon(1e-12));
  CHECK(got.vz == doctest::Approx(expect.vz).epsilon(1e-12));
  CHECK(got.s == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(got.vx == doctest::Approx(0.40825).epsilon(1e-5));
}

TEST_CASE("slerp outputs are unit and equally spaced") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Quaternion a = random_unit(rng);
    Quaternion b = random_unit(rng);
    if (std::abs(a.dot(b)) > 0.99) continue;
    const int K = 2 + static_cast<int>(rng.index(6));
    const FrameSet f = slerp_frames(a, b, K);
    for (const auto& q : f.quaternions) CHECK(std::abs(q.norm() - 1.0) < 1e-12);
    // Equal intervals hold for the quaternion arc; the rotation angle is twice the arc.
    if (a.dot(b) > 0.0) {
      const double step = rotation_angle_between(f.rotations[0], f.rotations[1]);
      for (int i = 1; i + 1 < K; ++i) {
        CHECK(std::abs(rotation_angle_between(f.rotations[i], f.rotations[i + 1]) - step) < 1e-9);
      }
    }
  }
}

TEST_CASE("default frames are equally spaced") {
  for (int K : {2, 3, 5, 8}) {
    const FrameSet f = default_frames(K);
    const double step = rotation_angle_between(f.rotations[0], f.rotations[1]);
    CHECK(step == doctest::Approx(2.0 * (std::numbers::pi / 2.0) / K).epsilon(1e-9));
    for (int i = 1; i + 1 < K; ++i) {
      CHECK(std::abs(rotation_angle_between(f.rotations[i], f.rotations[i + 1]) - step) < 1e-9);
    }
  }
}

TEST_CASE("slerp errors") {
  const auto [q1, q2] = default_endpoints();
  CHECK_THROWS_AS(slerp_frames(q1, q2, 0), std::invalid_argument);
  CHECK_THROWS_WITH(slerp_frames(q1, q1, 3), "slerp endpoints collinear");
  CHECK_THROWS_WITH(slerp_frames(q1, -q1, 3), "slerp endpoints collinear");
}

TEST_CASE("quat_to_matrix fixed values") {
  CHECK((quat_to_matrix({1, 0, 0, 0}) - Mat3::Identity()).norm() == 0.0);
  Mat3 expect = Mat3::Zero();
  expect.diagonal() << 1, -1, -1;
  CHECK((quat_to_matrix({0, 1, 0, 0}) - expect).norm() == 0.0);
  CHECK_THROWS(quat_to_matrix({1.1, 0, 0, 0}));
}

TEST_CASE("quat_to_matrix agrees with quaternion sandwich product") {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const Quaternion q = random_unit(rng);
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const Vec3 a = quat_to_matrix(q) * v;
    CHECK((a - sandwich(q, v)).norm() < 1e-12);
  }
}

TEST_CASE("quat_to_matrix properties over random quaternions") {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const Quaternion q = random_unit(rng);
    const Mat3 R = quat_to_matrix(q);
    CHECK((R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-9);
    CHECK((quat_to_matrix(-q) - R).cwiseAbs().maxCoeff() < 1e-15);
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    CHECK(std::abs((R * v).norm() - v.norm()) < 1e-9);
    Quaternion back = matrix_to_quat(R);
    if (back.dot(q) < 0) back = -back;
    CHECK(std::abs(back.dot(q) - 1.0) < 1e-12);
  }
}

TEST_CASE("default endpoints") {
  const auto [q1, q2] = default_endpoints();
  CHECK(q1.dot(q2) == 0.0);
  CHECK(std::abs(q1.norm() - 1.0) < 1e-15);
  CHECK(std::abs(q2.norm() - 1.0) < 1e-15);
  const FrameSet f = slerp_frames(q1, q2, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) CHECK((f.rotations[i] - f.rotations[j]).norm() > 1e-3);
}

TEST_CASE("frame_from_direction") {
  Rng rng(8);
  for (int t = 0; t < 500; ++t) {
    const Vec3 d = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const Mat3 R = frame_from_direction(d);
    CHECK((R * Vec3::UnitZ() - d).norm() < 1e-9);
    CHECK((R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-9);
  }
  // Ties pick the lowest world axis.
  const Mat3 up = frame_from_direction(Vec3::UnitZ());
  CHECK((up.col(0) - Vec3::UnitX()).norm() < 1e-15);
}

TEST_CASE("fibonacci sphere directions are unit and distinct") {
  const auto dirs = fibonacci_sphere(60);
  REQUIRE(dirs.size() == 60);
  double min_angle = 10.0;
  for (size_t i = 0; i < dirs.size(); ++i) {
    CHECK(std::abs(dirs[i].norm() - 1.0) < 1e-12);
    for (size_t j = i + 1; j < dirs.size(); ++j) {
      min_angle = std::min(min_angle, std::acos(std::clamp(dirs[i].dot(dirs[j]), -1.0, 1.0)));
    }
  }
  CHECK(min_angle > 0.0);
}

TEST_CASE("rng determinism and derived streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng::derive(42, 1), d = Rng::derive(42, 2);
  CHECK(c.next_u64() != d.next_u64());
  Rng e(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = e.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(e.index(7) < 7);
  }
  const auto s = e.sample_without_replacement(10, 10);
  std::vector<int> seen(10, 0);
  for (auto i : s) seen[i]++;
  for (int k : seen) CHECK(k == 1);
}
