#include "occugrasp/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "occugrasp/errors.hpp"
#include "occugrasp/evaluate.hpp"
#include "occugrasp/nn/checkpoint.hpp"
#include "occugrasp/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace occugrasp {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

std::unique_ptr<Model> load_model(const std::string& path, nn::Checkpoint* out = nullptr) {
  nn::Checkpoint ck = nn::read_checkpoint(path);
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_descriptor(ck.descriptor);
  } catch (const std::invalid_argument& e) {
    throw FormatError(path + ": " + e.what());
  }
  auto m = std::make_unique<Model>(cfg);
  check_architecture(*m, ck);
  m->store.values() = ck.params;
  if (out) *out = std::move(ck);
  return m;
}

}  // namespace

void cmd_gen_data(const GenDataArgs& a) {
  if (a.scenes == 0) throw std::invalid_argument("--scenes must be positive");
  if (a.views < 1) throw std::invalid_argument("--views must be at least 1");
  GenOptions g;
  g.views = a.views;
  g.noise_sigma = a.noise_sigma;
  g.noise_fraction = a.noise_fraction;
  g.voxel_size = a.voxel_size;
  g.threads = a.threads;
  if (g.noise_fraction < 0 || g.noise_fraction > 1 || g.noise_sigma < 0 || !(g.voxel_size > 0)) {
    throw std::invalid_argument("noise sigma must be >= 0, noise fraction in [0, 1], voxel size > 0");
  }
  ensure_dir(a.out);
  for (std::size_t i = 0; i < a.scenes; ++i) {
    write_records(a.out, {generate_record(a.seed, i, g)});
    std::fprintf(stderr, "gen-data: scene %zu/%zu\n", i + 1, a.scenes);
  }
}

void cmd_train(const TrainArgs& a) {
  const KeyValues file = a.config.empty() ? KeyValues{} : read_config_file(a.config);
  const RunConfig rc = resolve_config(file, a.overrides, std::getenv("OCCUGRASP_SEED"), &std::cerr);
  const auto records = read_records(a.data);
  if (records.empty()) throw IoError("no scenes in " + a.data);
  ensure_dir(a.out);
  const std::string ckpt_path = (fs::path(a.out) / "model.ckpt").string();
  const std::string log_path = (fs::path(a.out) / "train_log.jsonl").string();

  Model m(rc.model);
  LabeledSet labeled;
  std::fprintf(stderr, "train: labeling %zu scenes\n", records.size());
  label_records(labeled, records, m, rc.train.n_points, rc.train.threads);
  std::vector<LabeledScene*> ptrs;
  for (auto& s : labeled) ptrs.push_back(&s);
  Trainer tr(m, ptrs, rc.train);
  bool resumed = false;
  if (a.resume && fs::exists(ckpt_path)) {
    tr.load(nn::read_checkpoint(ckpt_path));
    resumed = true;
    std::fprintf(stderr, "train: resuming at step %llu\n", static_cast<unsigned long long>(tr.steps_done()));
  } else {
    tr.initialize();
  }
  write_text((fs::path(a.out) / "config.txt").string(), config_text(rc));

  std::ofstream log(log_path, resumed ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path);
  try {
    tr.run([&](std::uint64_t k, const LossReport& r) {
      nlohmann::json j;
      j["step"] = k;
      j["total"] = r.total;
      j["occupancy"] = r.occupancy;
      j["affordance"] = r.affordance;
      j["view"] = r.view;
      j["width"] = r.width;
      j["score"] = r.score;
      log << j.dump() << "\n";
      log.flush();
      if (a.checkpoint_every > 0 && (k + 1) % a.checkpoint_every == 0) nn::write_checkpoint(ckpt_path, tr.checkpoint());
      if ((k + 1) % 100 == 0) std::fprintf(stderr, "train: step %llu loss %.6g\n", static_cast<unsigned long long>(k + 1), r.total);
    });
  } catch (const DivergedError&) {
    nn::write_checkpoint(ckpt_path, tr.checkpoint());
    std::fprintf(stderr, "train: diverged at step %llu; kept the last good parameters in %s\n",
                 static_cast<unsigned long long>(tr.steps_done()), ckpt_path.c_str());
    throw;
  }
  nn::write_checkpoint(ckpt_path, tr.checkpoint());
}

void cmd_eval(const EvalArgs& a) {
  auto m = load_model(a.ckpt);
  if (!a.config.empty()) {
    const RunConfig rc = resolve_config(read_config_file(a.config), {}, std::getenv("OCCUGRASP_SEED"));
    if (rc.model.descriptor() != m->cfg.descriptor()) {
      throw ArchitectureMismatch("config architecture differs from checkpoint: " + rc.model.descriptor() + " vs " +
                                 m->cfg.descriptor());
    }
  }
  apply_eval_ablations(*m, a.ablate);
  const auto records = read_records(a.data);
  EvalOptions opt;
  opt.n_points = a.n_points;
  opt.noise_sigma = a.noise_sigma;
  opt.noise_fraction = a.noise_fraction;
  opt.infer.candidates = a.candidates;
  opt.infer.threads = a.threads;
  opt.infer.seed = a.seed.value_or(0);
  const EvalSummary s = evaluate(*m, records, opt);
  std::string ablate;
  for (const auto& f : a.ablate) ablate += (ablate.empty() ? "" : ",") + f;
  char noise[96];
  std::snprintf(noise, sizeof noise, "sigma=%.17g fraction=%.17g", a.noise_sigma, a.noise_fraction);
  write_metrics_csv(a.out, s,
                    {{"model", m->cfg.descriptor()},
                     {"ablate", ablate.empty() ? "none" : ablate},
                     {"seed", std::to_string(opt.infer.seed)},
                     {"candidates", std::to_string(a.candidates)},
                     {"noise", noise},
                     {"scenes", std::to_string(records.size())}});
  std::fprintf(stderr, "eval: %zu scenes, IOU %.4f F1 %.4f AP %.4f, %.3f s per scene\n", records.size(), s.iou, s.f1,
               s.ap, s.seconds);
}

void cmd_infer(const InferArgs& a) {
  auto m = load_model(a.ckpt);
  const PointCloud raw = read_pcb1(a.cloud);
  if (raw.empty()) throw FormatError(a.cloud + ": empty cloud");
  ensure_dir(a.out);
  const PointCloud cloud = sample_fixed(raw, a.n_points, mix_seed(a.seed, 0xc10d));
  InferOptions opt;
  opt.candidates = a.candidates;
  opt.seed = a.seed;
  opt.threads = a.threads;
  const InferResult r = infer(*m, cloud, opt);
  write_poses_csv((fs::path(a.out) / "poses.csv").string(), r.poses);
  if (m->cfg.use_occupancy) write_occ1((fs::path(a.out) / "occupancy.occ1").string(), region_to_grid(r.region, r.occupied));
  nlohmann::json t;
  t["encode"] = r.times.encode;
  t["planes"] = r.times.planes;
  t["query"] = r.times.query;
  t["decode"] = r.times.decode;
  t["total"] = r.times.total;
  t["queried_voxels"] = r.queried_voxels;
  t["poses"] = r.poses.size();
  write_text((fs::path(a.out) / "timing.json").string(), t.dump(2) + "\n");
  std::fprintf(stderr,
               "timing: encode %.4f s, planes %.4f s, query %.4f s, decode %.4f s, total %.4f s\n"
               "queried voxels %zu, poses %zu\n",
               r.times.encode, r.times.planes, r.times.query, r.times.decode, r.times.total, r.queried_voxels,
               r.poses.size());
}

void cmd_bench(const BenchArgs& a) {
  auto ours = load_model(a.ckpt);
  std::unique_ptr<Model> no_occ, ball;
  if (!a.ckpt_no_occupancy.empty()) no_occ = load_model(a.ckpt_no_occupancy);
  if (!a.ckpt_ball.empty()) ball = load_model(a.ckpt_ball);
  const auto records = read_records(a.data);
  EvalOptions opt;
  opt.n_points = a.n_points;
  opt.infer.candidates = a.candidates;
  opt.infer.threads = a.threads;
  opt.infer.seed = a.seed;
  const auto rows = bench_strategies(*ours, no_occ.get(), ball.get(), records, opt);
  write_text(a.out, bench_csv(rows));
  for (const auto& r : rows) {
    std::fprintf(stderr, "bench: %-18s AP %.4f IOU %s time %.3f s voxels %.0f\n", r.strategy.c_str(), r.ap,
                 r.iou ? std::to_string(*r.iou).c_str() : "null", r.seconds, r.queried_voxels);
  }
}

}  // namespace occugrasp
