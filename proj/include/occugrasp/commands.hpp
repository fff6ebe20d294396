#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "occugrasp/config.hpp"

namespace occugrasp {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitDiverged = 4,
  kExitArchitecture = 5,
  kExitBadCloud = 6,
};

struct GenDataArgs {
  std::size_t scenes = 0;
  std::uint64_t seed = 0;
  std::string out;
  int views = 1;
  double noise_sigma = 0.0;
  double noise_fraction = 0.0;
  double voxel_size = 0.01;
  int threads = 1;
};

void cmd_gen_data(const GenDataArgs& a);

struct TrainArgs {
  std::string config;  // optional file
  std::string data;
  std::string out;
  KeyValues overrides;  // flags, applied last
  bool resume = false;
  std::size_t checkpoint_every = 500;
};

/// Writes out/model.ckpt, out/train_log.jsonl and out/config.txt.
void cmd_train(const TrainArgs& a);

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string out;     // metrics CSV
  std::string config;  // optional; its model section must match the checkpoint
  std::vector<std::string> ablate;
  std::optional<std::uint64_t> seed;
  std::size_t candidates = 1024;
  std::size_t n_points = 2048;
  double noise_sigma = 0.0;
  double noise_fraction = 0.0;
  int threads = 1;
};

void cmd_eval(const EvalArgs& a);

struct InferArgs {
  std::string ckpt;
  std::string cloud;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t candidates = 1024;
  std::size_t n_points = 2048;
  int threads = 1;
};

/// Writes out/poses.csv, out/occupancy.occ1 and out/timing.json; prints the
/// stage breakdown on stderr. Throws FormatError for a malformed cloud.
void cmd_infer(const InferArgs& a);

struct BenchArgs {
  std::string ckpt;
  std::string ckpt_no_occupancy;
  std::string ckpt_ball;
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t candidates = 1024;
  std::size_t n_points = 2048;
  int threads = 1;
};

void cmd_bench(const BenchArgs& a);

/// Parses argv and runs a subcommand; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace occugrasp
