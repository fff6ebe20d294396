#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "occugrasp/metrics.hpp"
#include "occugrasp/nn/checkpoint.hpp"
#include "occugrasp/train.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

using namespace occugrasp;
using namespace occugrasp::nn;

TEST_CASE("loss combination weights") {
  const LossWeights w;
  CHECK(combine_losses(1, 1, 1, 1, 1, w) == 131.0);
  CHECK(combine_losses(0.5, 0, 0, 0, 0, w) == 0.5);
  CHECK(combine_losses(0, 0, 0, 2, 0, w) == 20.0);
  const LossReport r = total_loss(1, 2, 3, 4, 5, w);
  CHECK(r.total == 1 + 20 + 300 + 90);
}

TEST_CASE("occupancy loss is mean cross-entropy") {
  Tape t(nullptr, false);
  Tensor p({2, 1});
  p.data = {0.8, 0.25};
  const double l = t.value(occupancy_loss(t, t.input(p), {1.0, 0.0}))[0];
  CHECK(l == doctest::Approx(-(std::log(0.8) + std::log(0.75)) / 2).epsilon(1e-12));
  CHECK_THROWS(occupancy_loss(t, t.input(p), {1.0}));
}

TEST_CASE("width loss only counts positive cells") {
  Tape t(nullptr, false);
  GraspLossInputs in;
  Tensor a({1, 1});
  a.data = {0.5};
  in.affordance = t.input(a);
  in.affordance_labels = {1.0};
  Tensor v({1, 2});
  v.data = {0.2, 0.4};
  in.view_pre = t.input(v);
  in.view_labels = {0.2, 0.4};
  Tensor s({1, kPoseCells}), w({1, kPoseCells});
  in.scores = t.input(s);
  in.widths = t.input(w);
  in.score_labels.assign(kPoseCells, 0.0);
  in.width_labels.assign(kPoseCells, 0.0);
  in.width_labels[3] = 0.5;  // label on a negative cell is ignored
  GraspLossVars g = grasp_losses(t, in);
  CHECK(t.value(g.width)[0] == 0.0);
  CHECK(t.value(g.score)[0] == 0.0);
  CHECK(t.value(g.view)[0] == 0.0);
  CHECK(t.value(g.affordance)[0] == doctest::Approx(std::log(2.0)));
  in.score_labels[3] = 1.0;
  g = grasp_losses(t, in);
  // smooth-L1 of 0.5 is 0.5 * 0.25; one positive cell
  CHECK(t.value(g.width)[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(t.value(g.score)[0] == doctest::Approx(0.5 / kPoseCells).epsilon(1e-12));
}

TEST_CASE("average precision of ranked successes") {
  CHECK(average_precision({true, false, true}) == doctest::Approx(13.0 / 18.0).epsilon(1e-15));
  CHECK(average_precision({}) == 0.0);
  CHECK(average_precision({false, false}) == 0.0);
  CHECK(average_precision({true, true, true, true}) == 1.0);
  std::vector<bool> many(60, false);
  many[55] = true;  // beyond the top 50
  CHECK(average_precision(many) == 0.0);
  const auto p = precision_at_k({true, false, true, true});
  REQUIRE(p.size() == 4);
  CHECK(p[3] == 0.75);
}

TEST_CASE("occupancy metrics on a hand-counted case") {
  const auto m = eval_occupancy({0.9, 0.6, 0.4, 0.5, 0.1}, {1, 0, 1, 0, 0});
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 2);
  CHECK(m.iou == doctest::Approx(1.0 / 3.0));
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);
  const auto empty = eval_occupancy({0.1, 0.2}, {0, 0});
  CHECK(empty.iou == 1.0);
  CHECK(empty.f1 == 1.0);
}

TEST_CASE("IOU never exceeds F1 and both stay in [0, 1]") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.index(40);
    std::vector<double> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform();
      g[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    const auto m = eval_occupancy(p, g);
    CHECK(m.iou <= m.f1 + 1e-15);
    CHECK(m.iou >= 0.0);
    CHECK(m.f1 <= 1.0);
    CHECK(m.tp + m.fp + m.fn + m.tn == n);
    // F1 = 2 IOU / (1 + IOU)
    CHECK(m.f1 == doctest::Approx(2 * m.iou / (1 + m.iou)).epsilon(1e-12));
  }
}

namespace {

struct SmallSetup {
  std::vector<SceneRecord> records;
  LabeledSet labeled;
  std::vector<LabeledScene*> ptrs;
  Model model;

  explicit SmallSetup(std::size_t scenes, ModelConfig cfg = fixtures::small_config()) : model(cfg) {
    records = generate_records(404, scenes, GenOptions{});
    label_records(labeled, records, model, 256, 1);
    for (auto& s : labeled) ptrs.push_back(&s);
  }
};

TrainConfig small_train(std::size_t steps) {
  TrainConfig c;
  c.seed = 9;
  c.steps = steps;
  c.batch = 2;
  c.n_points = 256;
  c.train_voxels = 128;
  c.train_candidates = 4;
  c.region_candidates = 16;
  return c;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters untouched") {
  SmallSetup s(2);
  TrainConfig c = small_train(3);
  c.lr = 0.0;
  Trainer tr(s.model, s.ptrs, c);
  tr.initialize();
  const auto before = s.model.store.values();
  tr.run();
  CHECK(tr.steps_done() == 3);
  CHECK(s.model.store.values() == before);
}

TEST_CASE("training lowers the loss on a fixed batch") {
  SmallSetup s(2);
  Trainer tr(s.model, s.ptrs, small_train(40));
  tr.initialize();
  const double before = tr.batch_loss(0).total;
  tr.run();
  const double after = tr.batch_loss(0).total;
  MESSAGE("loss " << before << " -> " << after);
  CHECK(after < before);
}

TEST_CASE("resuming from a checkpoint replays the same run") {
  const auto path = (std::filesystem::temp_directory_path() / "occugrasp_resume.ckpt").string();
  std::vector<double> straight;
  {
    SmallSetup s(2);
    Trainer tr(s.model, s.ptrs, small_train(6));
    tr.initialize();
    tr.run();
    straight = s.model.store.values();
  }
  {
    SmallSetup s(2);
    Trainer tr(s.model, s.ptrs, small_train(3));
    tr.initialize();
    tr.run();
    write_checkpoint(path, tr.checkpoint());
  }
  SmallSetup s(2);
  Trainer tr(s.model, s.ptrs, small_train(6));
  tr.load(read_checkpoint(path));
  CHECK(tr.steps_done() == 3);
  tr.run();
  CHECK(s.model.store.values() == straight);
  std::filesystem::remove(path);
}

TEST_CASE("loading a checkpoint from another architecture fails") {
  SmallSetup s(1);
  Trainer tr(s.model, s.ptrs, small_train(1));
  tr.initialize();
  Checkpoint ck = tr.checkpoint();
  ModelConfig other = fixtures::small_config();
  other.k_groups = 1;
  Model m2(other);
  Trainer tr2(m2, s.ptrs, small_train(1));
  CHECK_THROWS_AS(tr2.load(ck), ArchitectureMismatch);
  ck.params.pop_back();
  CHECK_THROWS_AS(tr.load(ck), ArchitectureMismatch);
}

TEST_CASE("a non-finite loss raises divergence without touching parameters") {
  SmallSetup s(1);
  Trainer tr(s.model, s.ptrs, small_train(2));
  tr.initialize();
  // ReLU maps NaN to 0, so poison every parameter to reach the loss.
  for (double& v : s.model.store.values()) v = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(tr.step(), DivergedError);
  CHECK(tr.steps_done() == 0);
  for (double v : s.model.store.values()) CHECK(std::isnan(v));
}

TEST_CASE("end-to-end loss gradient matches finite differences") {
  for (bool occupancy : {true, false}) {
    ModelConfig cfg = fixtures::small_config();
    cfg.use_occupancy = occupancy;
    SmallSetup s(1, cfg);
    s.model.store.initialize(3);
    gradcheck::jitter(s.model.store, 8);
    const TrainConfig tc = small_train(1);
    const auto r = gradcheck::check_params(
        s.model.store, [&](Tape& t) { return scene_loss(t, s.model, *s.ptrs[0], tc, 1234).total; }, 60, 5);
    MESSAGE("occupancy " << occupancy << " max rel err " << r.max_rel_err);
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("thread count does not change training or inference") {
  std::vector<double> params[2];
  std::vector<double> probs[2];
  std::vector<double> scores[2];
  const int threads[2] = {1, 3};
  for (int k = 0; k < 2; ++k) {
    SmallSetup s(2);
    TrainConfig c = small_train(3);
    c.threads = threads[k];
    Trainer tr(s.model, s.ptrs, c);
    tr.initialize();
    tr.run();
    params[k] = s.model.store.values();
    InferOptions opt;
    opt.seed = 5;
    opt.candidates = 64;
    opt.threads = threads[k];
    const InferResult r = infer(s.model, s.records[0].observed, opt);
    probs[k] = r.probabilities;
    for (const auto& p : r.decoded) scores[k].push_back(p.score);
  }
  CHECK(params[0] == params[1]);
  CHECK(!probs[0].empty());
  CHECK(probs[0] == probs[1]);
  CHECK(scores[0] == scores[1]);
}
