#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "occugrasp/dataset.hpp"
#include "occugrasp/losses.hpp"
#include "occugrasp/model.hpp"
#include "occugrasp/nn/adam.hpp"
#include "occugrasp/nn/checkpoint.hpp"

namespace occugrasp {

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t steps = 2000;
  std::size_t batch = 2;
  double lr = 1e-3;
  std::size_t n_points = 2048;
  std::size_t train_voxels = 1024;      // occupancy loss voxels per scene
  std::size_t train_candidates = 8;     // grasp-loss candidates per scene
  std::size_t region_candidates = 256;  // candidates spanning the occupancy region
  double noise_sigma = 0.0;             // input augmentation
  double noise_fraction = 0.0;
  LossWeights weights;
  std::size_t region_budget = kDefaultRegionBudget;
  int threads = 1;
};

using LabeledSet = std::deque<LabeledScene>;

/// Labels every record for training (affordance labels are computed here,
/// grasp labels lazily).
void label_records(LabeledSet& out, const std::vector<SceneRecord>& records, const Model& m, std::size_t n_points,
                   int threads);

/// Tape quantities of one scene's loss.
struct SceneLoss {
  nn::Var total;
  nn::Var occupancy, affordance, view, width, score;
};

/// Builds the full multi-task loss for one scene on a recording tape. All
/// sampling inside is driven by `seed`. Candidate points and directions come
/// from the labels (teacher forcing); the grasp branch pools ground-truth
/// occupied voxels with their queried features.
SceneLoss scene_loss(nn::Tape& t, const Model& m, LabeledScene& scene, const TrainConfig& cfg, std::uint64_t seed);

/// Joint optimization with Adam. Step k draws its scenes and sampling seeds
/// from Rng::derive(seed, k), so a resumed run replays the same stream.
class Trainer {
 public:
  Trainer(Model& m, std::vector<LabeledScene*> scenes, TrainConfig cfg);

  /// Glorot initialization from the training seed; resets optimizer state.
  void initialize();
  /// Restores parameters and optimizer state; throws ArchitectureMismatch on
  /// a descriptor or size mismatch.
  void load(const nn::Checkpoint& ckpt);
  nn::Checkpoint checkpoint() const;

  std::uint64_t steps_done() const { return adam_.t; }

  /// Loss of step k's batch at the current parameters, without updating.
  LossReport batch_loss(std::uint64_t k);

  /// One optimizer step. Throws DivergedError (parameters untouched) when
  /// the loss or a gradient is not finite.
  LossReport step();

  /// Steps until steps_done() == cfg.steps.
  void run(const std::function<void(std::uint64_t, const LossReport&)>& on_step = {});

 private:
  std::pair<nn::Var, LossReport> build(nn::Tape& t, std::uint64_t k);

  Model& m_;
  std::vector<LabeledScene*> scenes_;
  TrainConfig cfg_;
  nn::AdamState adam_;
};

/// True if the checkpoint was written by a model with this configuration.
void check_architecture(const Model& m, const nn::Checkpoint& ckpt);

}  // namespace occugrasp
