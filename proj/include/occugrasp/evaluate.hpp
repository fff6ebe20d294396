#pragma once

#include <optional>
#include <string>
#include <vector>

#include "occugrasp/dataset.hpp"
#include "occugrasp/metrics.hpp"
#include "occugrasp/model.hpp"

namespace occugrasp {

struct EvalOptions {
  std::size_t n_points = 2048;
  InferOptions infer;
  double noise_sigma = 0.0;  // applied to the network input only
  double noise_fraction = 0.0;
};

struct SceneMetrics {
  std::string name;
  bool has_occupancy = false;
  OccupancyMetrics occupancy;
  double ap = 0.0;
  std::size_t poses = 0;
  std::size_t queried_voxels = 0;
  StageTimes times;
};

struct EvalSummary {
  std::vector<SceneMetrics> scenes;
  double iou = 0.0, f1 = 0.0, precision = 0.0, recall = 0.0, ap = 0.0;
  double queried_voxels = 0.0;
  double seconds = 0.0;  // mean inference wall time
};

/// Input cloud of record i for evaluation, with noise seeded per scene.
PointCloud eval_cloud(const SceneRecord& r, std::size_t i, const EvalOptions& opt);

SceneMetrics evaluate_scene(const Model& m, const SceneRecord& r, std::size_t i, const EvalOptions& opt);

/// Per-scene metrics in record order and their means (fixed summation
/// order). Occupancy columns average only over scenes with a region.
EvalSummary evaluate(const Model& m, const std::vector<SceneRecord>& records, const EvalOptions& opt);

/// Metrics CSV: '#' metadata lines, a header, one row per scene and a
/// final "mean" row. Timings are not written, so the file is reproducible.
std::string metrics_csv(const EvalSummary& s, const std::vector<std::pair<std::string, std::string>>& metadata);
void write_metrics_csv(const std::string& path, const EvalSummary& s,
                       const std::vector<std::pair<std::string, std::string>>& metadata);

/// Applies evaluation-time ablations to a loaded model: no_refine,
/// no_global, no_local. Throws std::invalid_argument on other names.
void apply_eval_ablations(Model& m, const std::vector<std::string>& flags);

struct BenchRow {
  std::string strategy;
  double ap = 0.0;
  std::optional<double> iou;
  double seconds = 0.0;         // median total inference time
  double query_seconds = 0.0;   // median occupancy query time
  double queried_voxels = 0.0;  // mean per scene
};

inline constexpr std::size_t kDenseGrid = 60;

/// Strategy comparison on the same scenes. `ours` drives both the local
/// and the dense-global rows; the other models are optional.
std::vector<BenchRow> bench_strategies(const Model& ours, const Model* no_occupancy, const Model* ball_local,
                                       const std::vector<SceneRecord>& records, const EvalOptions& opt);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace occugrasp
