#pragma once

#include <optional>
#include <string>
#include <vector>

#include "occugrasp/nn/adam.hpp"

namespace occugrasp::nn {

/// CKPT1 layout (little endian): "CKPT1", u32 descriptor length, descriptor
/// bytes, u64 parameter count, f64 parameters, then optionally "ADAM",
/// u64 step, f64 first moments, f64 second moments.
struct Checkpoint {
  std::string descriptor;
  std::vector<double> params;
  std::optional<AdamState> adam;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace occugrasp::nn
