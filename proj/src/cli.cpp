#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "occugrasp/commands.hpp"
#include "occugrasp/errors.hpp"

namespace occugrasp {

namespace {

std::uint64_t env_seed_or(std::uint64_t fallback) {
  const char* s = std::getenv("OCCUGRASP_SEED");
  if (!s || !*s) return fallback;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == std::string(s).size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("OCCUGRASP_SEED is not an unsigned integer: ") + s);
}

KeyValues parse_sets(const std::vector<std::string>& sets) {
  KeyValues kv;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return kv;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Grasp detection with local occupancy prediction on synthetic tabletop scenes"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenDataArgs gen;
  bool gen_seed_set = false;
  auto* g = app.add_subcommand("gen-data", "Generate synthetic scenes, observed clouds and ground-truth grids");
  g->add_option("--scenes", gen.scenes, "Number of scenes")->required()->check(CLI::PositiveNumber);
  g->add_option_function<std::uint64_t>(
       "--seed", [&](const std::uint64_t& s) { gen.seed = s, gen_seed_set = true; },
       "Base seed (falls back to OCCUGRASP_SEED, then 0)");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--views", gen.views, "Camera views merged per scene")->check(CLI::PositiveNumber);
  g->add_option("--noise-sigma", gen.noise_sigma, "Gaussian noise sigma in meters")->check(CLI::NonNegativeNumber);
  g->add_option("--noise-frac", gen.noise_fraction, "Fraction of points perturbed")->check(CLI::Range(0.0, 1.0));
  g->add_option("--voxel-size", gen.voxel_size, "Ground-truth voxel size in meters")->check(CLI::PositiveNumber);
  g->add_option("--threads", gen.threads, "Worker threads")->check(CLI::PositiveNumber);

  TrainArgs tr;
  std::vector<std::string> tr_sets;
  std::string tr_profile, tr_seed, tr_steps, tr_threads;
  auto* t = app.add_subcommand("train", "Train a model on generated scenes");
  t->add_option("--config", tr.config, "Config file of key = value lines")->check(CLI::ExistingFile);
  t->add_option("--data", tr.data, "Scene directory from gen-data")->required();
  t->add_option("--out", tr.out, "Output directory (model.ckpt, train_log.jsonl, config.txt)")->required();
  t->add_option("--set", tr_sets, "Override a config key: key=value (repeatable, wins over the file)");
  t->add_option("--profile", tr_profile, "Width profile: tiny or full");
  t->add_option("--seed", tr_seed, "Training seed");
  t->add_option("--steps", tr_steps, "Optimizer steps");
  t->add_option("--threads", tr_threads, "Worker threads (default: logical cores)");
  t->add_flag("--resume", tr.resume, "Continue from out/model.ckpt if present");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Steps between checkpoint writes (0: only at the end)");

  EvalArgs ev;
  std::string ev_ablate;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint: occupancy IOU/F1 and oracle AP per scene");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Scene directory")->required();
  e->add_option("--out", ev.out, "Metrics CSV path")->required();
  e->add_option("--config", ev.config, "Config whose architecture must match the checkpoint")->check(CLI::ExistingFile);
  e->add_option("--ablate", ev_ablate, "Comma-separated: no_refine, no_global, no_local");
  e->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { ev.seed = s; }, "Sampling seed");
  e->add_option("--candidates", ev.candidates, "Grasp candidates per scene")->check(CLI::PositiveNumber);
  e->add_option("--points", ev.n_points, "Network input points")->check(CLI::PositiveNumber);
  e->add_option("--noise-sigma", ev.noise_sigma, "Input noise sigma in meters")->check(CLI::NonNegativeNumber);
  e->add_option("--noise-frac", ev.noise_fraction, "Fraction of input points perturbed")->check(CLI::Range(0.0, 1.0));
  e->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);

  InferArgs in;
  bool in_seed_set = false;
  auto* i = app.add_subcommand("infer", "Detect grasps in one point cloud");
  i->add_option("--ckpt", in.ckpt, "Checkpoint file")->required();
  i->add_option("--cloud", in.cloud, "PCB1 point cloud")->required();
  i->add_option("--out", in.out, "Output directory (poses.csv, occupancy.occ1, timing.json)")->required();
  i->add_option_function<std::uint64_t>(
       "--seed", [&](const std::uint64_t& s) { in.seed = s, in_seed_set = true; }, "Sampling seed");
  i->add_option("--candidates", in.candidates, "Grasp candidates")->check(CLI::PositiveNumber);
  i->add_option("--points", in.n_points, "Network input points")->check(CLI::PositiveNumber);
  i->add_option("--threads", in.threads, "Worker threads")->check(CLI::PositiveNumber);

  BenchArgs be;
  bool be_seed_set = false;
  auto* b = app.add_subcommand("bench", "Compare local-region and dense-global occupancy strategies");
  b->add_option("--ckpt", be.ckpt, "Checkpoint with occupancy (drives local and dense rows)")->required();
  b->add_option("--ckpt-no-occupancy", be.ckpt_no_occupancy, "Checkpoint trained without occupancy");
  b->add_option("--ckpt-ball", be.ckpt_ball, "Checkpoint with ball-query local context only");
  b->add_option("--data", be.data, "Scene directory")->required();
  b->add_option("--out", be.out, "Comparison CSV path")->required();
  b->add_option_function<std::uint64_t>(
       "--seed", [&](const std::uint64_t& s) { be.seed = s, be_seed_set = true; }, "Sampling seed");
  b->add_option("--candidates", be.candidates, "Grasp candidates per scene")->check(CLI::PositiveNumber);
  b->add_option("--points", be.n_points, "Network input points")->check(CLI::PositiveNumber);
  b->add_option("--threads", be.threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) {
      if (!gen_seed_set) gen.seed = env_seed_or(0);
      cmd_gen_data(gen);
    } else if (t->parsed()) {
      tr.overrides = parse_sets(tr_sets);
      if (!tr_profile.empty()) tr.overrides.emplace_back("profile", tr_profile);
      if (!tr_seed.empty()) tr.overrides.emplace_back("seed", tr_seed);
      if (!tr_steps.empty()) tr.overrides.emplace_back("steps", tr_steps);
      if (!tr_threads.empty()) tr.overrides.emplace_back("threads", tr_threads);
      cmd_train(tr);
    } else if (e->parsed()) {
      if (!ev.seed) ev.seed = env_seed_or(0);
      std::stringstream ss(ev_ablate);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) ev.ablate.push_back(item);
      cmd_eval(ev);
    } else if (i->parsed()) {
      if (!in_seed_set) in.seed = env_seed_or(0);
      try {
        cmd_infer(in);
      } catch (const FormatError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitBadCloud;
      }
    } else if (b->parsed()) {
      if (!be_seed_set) be.seed = env_seed_or(0);
      cmd_bench(be);
    }
  } catch (const DivergedError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitDiverged;
  } catch (const ArchitectureMismatch& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitArchitecture;
  } catch (const IoError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitIo;
  } catch (const FormatError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitIo;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace occugrasp
