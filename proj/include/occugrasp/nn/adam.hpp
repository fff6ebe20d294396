#pragma once

#include <cstdint>
#include <vector>

namespace occugrasp::nn {

struct AdamState {
  std::uint64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. Throws DivergedError when any
/// gradient is non-finite; params and state are left untouched in that case.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const AdamConfig& cfg = {});

}  // namespace occugrasp::nn
