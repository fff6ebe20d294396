#include "doctest.h"
#include "fixtures.hpp"
#include "occugrasp/model.hpp"

#include <cmath>
#include <set>

using namespace occugrasp;
using namespace occugrasp::nn;

TEST_CASE("descriptor round trips every field") {
  ModelConfig c = fixtures::small_config();
  c.k_groups = 2;
  c.use_density = false;
  c.refine = false;
  c.implicit_mode = ImplicitMode::SetAbstraction;
  c.local_mode = LocalMode::Ball;
  c.spec.r = 0.047;
  const ModelConfig back = ModelConfig::from_descriptor(c.descriptor());
  CHECK(back.descriptor() == c.descriptor());
  CHECK(back.k_groups == 2);
  CHECK_FALSE(back.use_density);
  CHECK(back.implicit_mode == ImplicitMode::SetAbstraction);
  CHECK(back.local_mode == LocalMode::Ball);
  CHECK(back.spec.r == 0.047);
}

TEST_CASE("descriptor rejects unknown and missing keys") {
  const std::string d = ModelConfig{}.descriptor();
  CHECK_THROWS_AS(ModelConfig::from_descriptor(d + ";extra=1"), std::invalid_argument);
  const auto cut = d.substr(d.find(';') + 1);  // drops k_groups
  CHECK_THROWS_AS(ModelConfig::from_descriptor(cut), std::invalid_argument);
}

TEST_CASE("validate rejects inconsistent widths") {
  ModelConfig c;
  c.k_groups = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ModelConfig{};
  c.c_q = c.c_t + c.c_p;  // leaves no room for the position embedding
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(ModelConfig{}.validate());
}

TEST_CASE("ablations change the parameter layout") {
  const Model full(fixtures::small_config());
  ModelConfig c = fixtures::small_config();
  c.use_occupancy = false;
  const Model no_occ(c);
  CHECK(no_occ.store.size() < full.store.size());
  CHECK(no_occ.shape_feature_width() == c.c_p);
  CHECK(full.shape_feature_width() == c.c_q);
  c = fixtures::small_config();
  c.use_density = false;
  const Model no_density(c);
  CHECK(no_density.store.size() < full.store.size());
}

TEST_CASE("zero parameters give 0.5 view scores") {
  Model m(fixtures::small_config());
  for (double& v : m.store.values()) v = 0.0;
  Tape t(&m.store, false);
  Tensor rows({3, m.cfg.c_p});
  for (double& v : rows.data) v = 0.7;
  const Tensor& s = t.value(view_scores(t, m, t.input(rows)));
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == m.cfg.views);
  for (double v : s.data) CHECK(v == 0.5);
  CHECK(argmax_row(s, 0) == 0);
}

namespace {

SceneRecord small_record(std::uint64_t seed) { return generate_record(seed, 0, GenOptions{}); }

}  // namespace

TEST_CASE("inference is deterministic and well formed") {
  const SceneRecord r = small_record(11);
  Model m(fixtures::small_config());
  m.store.initialize(5);
  const PointCloud cloud = network_cloud(r, 512);
  InferOptions opt;
  opt.candidates = 64;
  opt.seed = 3;
  const InferResult a = infer(m, cloud, opt);
  const InferResult b = infer(m, cloud, opt);
  REQUIRE(a.poses.size() == b.poses.size());
  CHECK(a.poses.size() <= opt.nms_top);
  CHECK(a.candidates.size() == 64);
  CHECK(a.decoded.size() == 64);
  CHECK(a.region.size() == a.probabilities.size());
  CHECK(a.queried_voxels == a.region.size());
  CHECK(a.probabilities == b.probabilities);
  for (std::size_t i = 0; i < a.poses.size(); ++i) {
    CHECK(a.poses[i].score == b.poses[i].score);
    CHECK(std::isfinite(a.poses[i].width));
    CHECK(a.poses[i].width >= 0.0);
    CHECK(a.poses[i].width <= 2 * m.cfg.spec.r);
    if (i > 0) CHECK(a.poses[i - 1].score >= a.poses[i].score);
  }
  for (double p : a.probabilities) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  CHECK(a.times.total >= 0.0);
}

TEST_CASE("inference without occupancy skips the region") {
  const SceneRecord r = small_record(12);
  ModelConfig c = fixtures::small_config();
  c.use_occupancy = false;
  Model m(c);
  m.store.initialize(5);
  InferOptions opt;
  opt.candidates = 32;
  const InferResult res = infer(m, network_cloud(r, 512), opt);
  CHECK(res.region.size() == 0);
  CHECK(res.probabilities.empty());
  CHECK(res.queried_voxels == 0);
  CHECK(res.candidates.size() == 32);
}

TEST_CASE("ball and nearest local modes both infer") {
  const SceneRecord r = small_record(13);
  for (LocalMode mode : {LocalMode::Nearest, LocalMode::Ball}) {
    ModelConfig c = fixtures::small_config();
    c.local_mode = mode;
    Model m(c);
    m.store.initialize(1);
    InferOptions opt;
    opt.candidates = 16;
    const InferResult res = infer(m, network_cloud(r, 256), opt);
    CHECK(res.region.size() > 0);
    for (double p : res.probabilities) CHECK(std::isfinite(p));
  }
}

TEST_CASE("shape inputs from the cloud keep only points in the cylinder") {
  const GraspRegionSpec spec;
  PointCloud cloud{Vec3(0, 0, 0.02), Vec3(0, 0, 0.5), Vec3(0.2, 0, 0.02), Vec3(0.01, 0.01, 0.01)};
  const CandidateFrame f{Vec3(0, 0, 0), Mat3::Identity()};
  const auto in = shape_inputs_from_cloud(cloud, {f}, spec);
  REQUIRE(in.size() == 1);
  std::set<int> rows(in[0].feature_rows.begin(), in[0].feature_rows.end());
  for (int i = 0; i < 4; ++i) {
    CHECK((rows.count(i) == 1) == in_grasp_cylinder(cloud[i], f, spec, 0.0));
  }
}
