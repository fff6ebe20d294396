#include "occugrasp/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "occugrasp/errors.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PointCloud eval_cloud(const SceneRecord& r, std::size_t i, const EvalOptions& opt) {
  return network_cloud(r, opt.n_points, opt.noise_sigma, opt.noise_fraction, mix_seed(opt.infer.seed, 0xe7a1 + i));
}

SceneMetrics evaluate_scene(const Model& m, const SceneRecord& r, std::size_t i, const EvalOptions& opt) {
  const PointCloud cloud = eval_cloud(r, i, opt);
  const InferResult res = infer(m, cloud, opt.infer);
  SceneMetrics s;
  s.name = r.name;
  s.has_occupancy = m.cfg.use_occupancy;
  if (s.has_occupancy) {
    s.occupancy = eval_occupancy(res.probabilities, crop_ground_truth(res.region, r.occupancy));
  }
  if (res.poses.empty()) std::fprintf(stderr, "warning: %s: no poses, AP is 0\n", r.name.c_str());
  s.ap = oracle_ap(r.scene, res.poses, m.cfg.body, m.cfg.spec);
  s.poses = res.poses.size();
  s.queried_voxels = res.queried_voxels;
  s.times = res.times;
  return s;
}

EvalSummary evaluate(const Model& m, const std::vector<SceneRecord>& records, const EvalOptions& opt) {
  EvalSummary out;
  for (std::size_t i = 0; i < records.size(); ++i) out.scenes.push_back(evaluate_scene(m, records[i], i, opt));
  std::size_t with_occ = 0;
  for (const auto& s : out.scenes) {
    out.ap += s.ap;
    out.queried_voxels += static_cast<double>(s.queried_voxels);
    out.seconds += s.times.total;
    if (!s.has_occupancy) continue;
    ++with_occ;
    out.iou += s.occupancy.iou;
    out.f1 += s.occupancy.f1;
    out.precision += s.occupancy.precision;
    out.recall += s.occupancy.recall;
  }
  if (!out.scenes.empty()) {
    const double n = static_cast<double>(out.scenes.size());
    out.ap /= n;
    out.queried_voxels /= n;
    out.seconds /= n;
  }
  if (with_occ > 0) {
    const double n = static_cast<double>(with_occ);
    out.iou /= n;
    out.f1 /= n;
    out.precision /= n;
    out.recall /= n;
  }
  return out;
}

std::string metrics_csv(const EvalSummary& s, const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::string out;
  for (const auto& [k, v] : metadata) out += "# " + k + "=" + v + "\n";
  out += "scene,iou,f1,precision,recall,tp,fp,fn,ap,poses,queried_voxels\n";
  for (const auto& r : s.scenes) {
    if (r.has_occupancy) {
      out += r.name + "," + fmt(r.occupancy.iou) + "," + fmt(r.occupancy.f1) + "," + fmt(r.occupancy.precision) + "," +
             fmt(r.occupancy.recall) + "," + std::to_string(r.occupancy.tp) + "," + std::to_string(r.occupancy.fp) +
             "," + std::to_string(r.occupancy.fn);
    } else {
      out += r.name + ",,,,,,,";
    }
    out += "," + fmt(r.ap) + "," + std::to_string(r.poses) + "," + std::to_string(r.queried_voxels) + "\n";
  }
  const bool occ = !s.scenes.empty() && s.scenes.front().has_occupancy;
  out += "mean,";
  out += occ ? fmt(s.iou) + "," + fmt(s.f1) + "," + fmt(s.precision) + "," + fmt(s.recall) : std::string(",,,");
  out += ",,,," + fmt(s.ap) + ",," + fmt(s.queried_voxels) + "\n";
  return out;
}

void write_metrics_csv(const std::string& path, const EvalSummary& s,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << metrics_csv(s, metadata);
  if (!f) throw IoError("write failed: " + path);
}

void apply_eval_ablations(Model& m, const std::vector<std::string>& flags) {
  for (const auto& f : flags) {
    if (f == "no_refine") {
      m.cfg.refine = false;
    } else if (f == "no_global") {
      m.cfg.use_global = false;
    } else if (f == "no_local") {
      m.cfg.use_local = false;
    } else {
      throw std::invalid_argument("unknown evaluation ablation: " + f + " (expected no_refine, no_global, no_local)");
    }
  }
  if (m.cfg.use_occupancy && !m.cfg.use_global && !m.cfg.use_local) {
    throw std::invalid_argument("cannot disable both global and local context");
  }
}

std::vector<BenchRow> bench_strategies(const Model& ours, const Model* no_occupancy, const Model* ball_local,
                                       const std::vector<SceneRecord>& records, const EvalOptions& opt) {
  if (!ours.cfg.use_occupancy) throw std::invalid_argument("bench: the main model must predict occupancy");
  auto run = [&](const char* name, const Model& m, std::size_t dense) {
    BenchRow row;
    row.strategy = name;
    EvalOptions o = opt;
    o.infer.dense_grid = dense;
    const EvalSummary s = evaluate(m, records, o);
    row.ap = s.ap;
    if (m.cfg.use_occupancy) row.iou = s.iou;
    std::vector<double> total, query;
    for (const auto& sc : s.scenes) {
      total.push_back(sc.times.total);
      query.push_back(sc.times.query);
    }
    row.seconds = median(total);
    row.query_seconds = median(query);
    row.queried_voxels = s.queried_voxels;
    return row;
  };
  std::vector<BenchRow> rows;
  if (no_occupancy) rows.push_back(run("without_occupancy", *no_occupancy, 0));
  rows.push_back(run("global_dense", ours, kDenseGrid));
  if (ball_local) rows.push_back(run("ball_local", *ball_local, 0));
  rows.push_back(run("local_region", ours, 0));
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "strategy,ap,iou,seconds,query_seconds,queried_voxels\n";
  for (const auto& r : rows) {
    out += r.strategy + "," + fmt(r.ap) + "," + (r.iou ? fmt(*r.iou) : std::string("null")) + "," + fmt(r.seconds) +
           "," + fmt(r.query_seconds) + "," + fmt(r.queried_voxels) + "\n";
  }
  return out;
}

}  // namespace occugrasp
