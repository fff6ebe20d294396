#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "occugrasp/nn/tape.hpp"
#include "occugrasp/rng.hpp"

namespace gradcheck {

// Central differences are accurate to roughly eps * |loss| / h in absolute
// terms, so the relative error uses a floor of 1e-3 in the denominator.
inline constexpr double kStep = 1e-6;
inline constexpr double kFloor = 1e-3;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kFloor});
}

struct Result {
  double max_rel_err = 0.0;
  int checked = 0;
};

/// Adds N(0, scale^2) noise to every parameter. Zero-initialized biases put
/// ReLU inputs exactly on the kink wherever an input row is all zero, where
/// central differences see the average of the two one-sided slopes; checks
/// run at a jittered, generic point instead.
inline void jitter(occugrasp::nn::ParameterStore& store, std::uint64_t seed, double scale = 0.05) {
  occugrasp::Rng rng(seed);
  for (double& v : store.values()) v += scale * rng.normal();
}

/// Compares backward() against central differences at the given parameter
/// positions. build_loss must construct the loss on the tape it is given,
/// reading parameters from `store`.
inline Result check_indices(occugrasp::nn::ParameterStore& store,
                            const std::function<occugrasp::nn::Var(occugrasp::nn::Tape&)>& build_loss,
                            const std::vector<std::size_t>& indices) {
  using namespace occugrasp::nn;
  std::vector<double> analytic;
  {
    Tape t(&store);
    analytic = t.backward(build_loss(t));
  }
  auto eval = [&]() {
    Tape t(&store, false);
    return t.value(build_loss(t)).data[0];
  };
  Result r;
  for (std::size_t idx : indices) {
    double& p = store.values()[idx];
    const double saved = p;
    p = saved + kStep;
    const double up = eval();
    p = saved - kStep;
    const double down = eval();
    p = saved;
    const double numeric = (up - down) / (2 * kStep);
    r.max_rel_err = std::max(r.max_rel_err, rel_err(analytic[idx], numeric));
    if (std::getenv("GRADCHECK_VERBOSE")) std::fprintf(stderr, "param %zu analytic %.10g numeric %.10g\n", idx, analytic[idx], numeric);
    ++r.checked;
  }
  return r;
}

/// check_indices at `count` random parameter positions.
inline Result check_params(occugrasp::nn::ParameterStore& store,
                           const std::function<occugrasp::nn::Var(occugrasp::nn::Tape&)>& build_loss, int count,
                           std::uint64_t seed) {
  occugrasp::Rng rng(seed);
  const std::size_t n = store.size();
  const std::size_t picks = std::min<std::size_t>(static_cast<std::size_t>(count), n);
  return check_indices(store, build_loss, rng.sample_without_replacement(n, picks));
}

}  // namespace gradcheck
