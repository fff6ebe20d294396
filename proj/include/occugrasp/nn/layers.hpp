#pragma once

#include <string>
#include <vector>

#include "occugrasp/nn/tape.hpp"
#include "occugrasp/nn/tensor.hpp"

namespace occugrasp::nn {

struct Linear {
  ParamSlice weight;  // [in, out]
  ParamSlice bias;    // [out]
  int in = 0;
  int out = 0;

  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out);
  Var operator()(Tape& t, Var x) const;
};

/// Affine layers with ReLU between them; the last layer is linear.
struct Mlp {
  std::vector<Linear> layers;
  std::vector<int> widths;

  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, std::vector<int> widths);
  Var operator()(Tape& t, Var x) const;
  int in() const { return widths.front(); }
  int out() const { return widths.back(); }
  /// sum over layers of w_i * w_{i+1} + w_{i+1}
  static std::size_t parameter_count(const std::vector<int>& widths);
};

struct Conv2d {
  ParamSlice weight;  // [k*k*in, out]
  ParamSlice bias;    // [out]
  int in = 0;
  int out = 0;
  int k = 3;

  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& name, int in, int out, int k = 3);
  Var operator()(Tape& t, Var x) const;
};

/// Per-pixel projection to `channels`, then three residual blocks
/// x <- relu(x + conv(relu(conv(x)))) with 3x3 zero-padded convolutions.
/// Input [B,H,W,in] or [H,W,in]; spatial extents must be at least 4.
struct PlaneEncoder {
  Linear projection;
  std::vector<Conv2d> convs;  // two per block
  int in = 0;
  int channels = 0;

  static constexpr int kBlocks = 3;

  PlaneEncoder() = default;
  PlaneEncoder(ParameterStore& store, const std::string& name, int in, int channels);
  Var operator()(Tape& t, Var planes) const;
  static std::size_t parameter_count(int in, int channels);
};

}  // namespace occugrasp::nn
