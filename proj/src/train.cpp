#include "occugrasp/train.hpp"

#include <cmath>
#include <stdexcept>

#include "occugrasp/errors.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

using nn::Tape;
using nn::Tensor;
using nn::Var;

void label_records(LabeledSet& out, const std::vector<SceneRecord>& records, const Model& m, std::size_t n_points,
                   int threads) {
  for (const auto& r : records) out.emplace_back(r, n_points, m.directions, m.cfg.spec, m.cfg.body, threads);
}

SceneLoss scene_loss(Tape& t, const Model& m, LabeledScene& scene, const TrainConfig& cfg, std::uint64_t seed) {
  const ModelConfig& mc = m.cfg;
  PointCloud cloud = scene.cloud();
  if (cfg.noise_sigma > 0.0 && cfg.noise_fraction > 0.0) {
    cloud = add_gaussian_noise(cloud, cfg.noise_sigma, cfg.noise_fraction, mix_seed(seed, 1));
  }
  const std::size_t N = cloud.size();
  SceneEncoding enc = encode_points_only(t, m, cloud);
  if (mc.use_occupancy) build_planes(t, m, enc);

  auto frame_at = [&](std::size_t i) {
    const PointLabels& l = scene.labels(i);
    return CandidateFrame{cloud[i], frame_from_direction(m.directions[static_cast<std::size_t>(l.best)])};
  };

  // Grasp-loss candidates and their labels.
  const auto idx_g = sample_candidates(N, scene.area(), cfg.train_candidates, mix_seed(seed, 4));
  const int B = static_cast<int>(idx_g.size());
  std::vector<CandidateFrame> frames_g;
  std::vector<double> view_labels, score_labels, width_labels;
  for (std::size_t i : idx_g) {
    const PointLabels& l = scene.labels(i);
    frames_g.push_back(frame_at(i));
    view_labels.insert(view_labels.end(), l.view.begin(), l.view.end());
    const auto off = static_cast<std::ptrdiff_t>(l.best) * kPoseCells;
    score_labels.insert(score_labels.end(), l.success.begin() + off, l.success.begin() + off + kPoseCells);
    width_labels.insert(width_labels.end(), l.width.begin() + off, l.width.begin() + off + kPoseCells);
  }

  Var l_o = t.constant(Tensor::scalar(0.0));
  Var shape_features{};
  std::vector<ShapeInput> inputs;
  if (mc.use_occupancy) {
    const auto idx_r = sample_candidates(N, scene.area(), cfg.region_candidates, mix_seed(seed, 2));
    std::vector<CandidateFrame> frames_r;
    CandidateContext ctx;
    for (std::size_t i : idx_r) {
      frames_r.push_back(frame_at(i));
      ctx.points.push_back(cloud[i]);
    }
    ctx.embeddings = nn::gather_rows(t, enc.embeddings, std::vector<int>(idx_r.begin(), idx_r.end()));
    const Aabb clip = query_domain_box(enc.affine);
    const LocalRegion region = build_region(frames_r, mc.spec, cfg.region_budget, &clip, cfg.threads);
    const auto truth = crop_ground_truth(region, scene.record().occupancy);
    const auto pick = sample_training_voxels(region.size(), cfg.train_voxels, mix_seed(seed, 3));
    std::vector<Vec3> queries;
    std::vector<double> bits;
    for (std::size_t n : pick) {
      queries.push_back(region.centers[n]);
      bits.push_back(truth[n]);
    }
    const int n_o = static_cast<int>(queries.size());
    // Ground-truth occupied voxels inside each grasp candidate's cylinder.
    const OccupancyGrid& gt = scene.record().occupancy;
    for (const auto& f : frames_g) {
      ShapeInput in;
      in.frame = f;
      for (const auto& key : cylinder_voxels(f, mc.spec)) {
        const Vec3 c = mc.spec.v * Vec3(key.x + 0.5, key.y + 0.5, key.z + 0.5);
        if (!clip.contains(c) || !gt.occupied_at(c)) continue;
        in.points.push_back(c);
        in.feature_rows.push_back(static_cast<int>(queries.size()));
        queries.push_back(c);
      }
      inputs.push_back(std::move(in));
    }
    shape_features = query_features(t, m, enc, ctx, queries, nullptr, cfg.threads);
    if (n_o > 0) {
      const Var probs = occupancy_probabilities(t, m, nn::slice_rows(t, shape_features, 0, n_o));
      l_o = occupancy_loss(t, probs, bits);
    }
  } else {
    inputs = shape_inputs_from_cloud(cloud, frames_g, mc.spec);
    shape_features = enc.embeddings;
  }

  GraspLossInputs g;
  g.affordance = enc.affordance;
  g.affordance_labels = scene.affordance();
  g.view_pre = view_scores(t, m, nn::gather_rows(t, enc.embeddings, std::vector<int>(idx_g.begin(), idx_g.end())));
  g.view_labels = std::move(view_labels);
  const Var shape = m.shape(t, inputs, shape_features, mix_seed(seed, 5));
  if (mc.refine) g.view_post = refine_scores(t, m, shape);
  const auto [scores, widths] = m.pose(t, shape);
  g.scores = scores;
  g.widths = widths;
  g.score_labels = std::move(score_labels);
  g.width_labels = std::move(width_labels);
  (void)B;
  const GraspLossVars parts = grasp_losses(t, g);
  SceneLoss out;
  out.occupancy = l_o;
  out.affordance = parts.affordance;
  out.view = parts.view;
  out.width = parts.width;
  out.score = parts.score;
  out.total = weighted_total(t, l_o, parts, cfg.weights);
  return out;
}

Trainer::Trainer(Model& m, std::vector<LabeledScene*> scenes, TrainConfig cfg)
    : m_(m), scenes_(std::move(scenes)), cfg_(cfg) {
  if (scenes_.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg_.batch == 0) throw std::invalid_argument("train: batch must be positive");
  adam_.m.assign(m_.store.size(), 0.0);
  adam_.v.assign(m_.store.size(), 0.0);
}

void Trainer::initialize() {
  m_.store.initialize(cfg_.seed);
  adam_ = {};
  adam_.m.assign(m_.store.size(), 0.0);
  adam_.v.assign(m_.store.size(), 0.0);
}

void check_architecture(const Model& m, const nn::Checkpoint& ckpt) {
  if (ckpt.descriptor != m.cfg.descriptor()) {
    throw ArchitectureMismatch("checkpoint architecture differs: " + ckpt.descriptor + " vs " + m.cfg.descriptor());
  }
  if (ckpt.params.size() != m.store.size()) {
    throw ArchitectureMismatch("checkpoint holds " + std::to_string(ckpt.params.size()) + " parameters, model has " +
                               std::to_string(m.store.size()));
  }
}

void Trainer::load(const nn::Checkpoint& ckpt) {
  check_architecture(m_, ckpt);
  m_.store.values() = ckpt.params;
  if (ckpt.adam) {
    if (ckpt.adam->m.size() != m_.store.size() || ckpt.adam->v.size() != m_.store.size()) {
      throw ArchitectureMismatch("checkpoint optimizer state has the wrong size");
    }
    adam_ = *ckpt.adam;
  } else {
    adam_ = {};
    adam_.m.assign(m_.store.size(), 0.0);
    adam_.v.assign(m_.store.size(), 0.0);
  }
}

nn::Checkpoint Trainer::checkpoint() const { return {m_.cfg.descriptor(), m_.store.values(), adam_}; }

std::pair<Var, LossReport> Trainer::build(Tape& t, std::uint64_t k) {
  Rng rng = Rng::derive(cfg_.seed, k);
  std::vector<Var> totals;
  LossReport rep;
  const double inv = 1.0 / static_cast<double>(cfg_.batch);
  for (std::size_t b = 0; b < cfg_.batch; ++b) {
    LabeledScene& s = *scenes_[rng.index(scenes_.size())];
    const SceneLoss l = scene_loss(t, m_, s, cfg_, rng.next_u64());
    totals.push_back(l.total);
    rep.occupancy += inv * t.value(l.occupancy)[0];
    rep.affordance += inv * t.value(l.affordance)[0];
    rep.view += inv * t.value(l.view)[0];
    rep.width += inv * t.value(l.width)[0];
    rep.score += inv * t.value(l.score)[0];
  }
  Var total = totals[0];
  for (std::size_t b = 1; b < totals.size(); ++b) total = nn::add(t, total, totals[b]);
  total = nn::scale(t, total, inv);
  rep.total = t.value(total)[0];
  return {total, rep};
}

LossReport Trainer::batch_loss(std::uint64_t k) {
  Tape t(&m_.store, false);
  return build(t, k).second;
}

LossReport Trainer::step() {
  Tape t(&m_.store, true);
  auto [total, rep] = build(t, adam_.t);
  if (!std::isfinite(rep.total)) throw DivergedError();
  const std::vector<double> grads = t.backward(total);
  for (double g : grads) {
    if (!std::isfinite(g)) throw DivergedError();
  }
  nn::adam_step(m_.store.values(), grads, adam_, {cfg_.lr});
  return rep;
}

void Trainer::run(const std::function<void(std::uint64_t, const LossReport&)>& on_step) {
  while (adam_.t < cfg_.steps) {
    const std::uint64_t k = adam_.t;
    const LossReport rep = step();
    if (on_step) on_step(k, rep);
  }
}

}  // namespace occugrasp
