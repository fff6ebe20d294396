#include "occugrasp/nn/layers.hpp"

#include <stdexcept>

namespace occugrasp::nn {

Linear::Linear(ParameterStore& store, const std::string& name, int in_, int out_) : in(in_), out(out_) {
  weight = store.add_weight(name + ".w", {in, out}, in, out);
  bias = store.add_bias(name + ".b", {out});
}

Var Linear::operator()(Tape& t, Var x) const {
  return linear(t, x, t.parameter(weight), t.parameter(bias));
}

Mlp::Mlp(ParameterStore& store, const std::string& name, std::vector<int> w) : widths(std::move(w)) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(store, name + "." + std::to_string(i), widths[i], widths[i + 1]);
  }
}

Var Mlp::operator()(Tape& t, Var x) const {
  const Tensor& xv = t.value(x);
  if (xv.cols() != in()) {
    throw std::invalid_argument("mlp: expected input width " + std::to_string(in()) + ", got " +
                                shape_string(xv.shape));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](t, x);
    if (i + 1 < layers.size()) x = relu(t, x);
  }
  return x;
}

std::size_t Mlp::parameter_count(const std::vector<int>& widths) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    n += static_cast<std::size_t>(widths[i]) * widths[i + 1] + widths[i + 1];
  return n;
}

Conv2d::Conv2d(ParameterStore& store, const std::string& name, int in_, int out_, int k_)
    : in(in_), out(out_), k(k_) {
  weight = store.add_weight(name + ".w", {k * k * in, out}, k * k * in, k * k * out);
  bias = store.add_bias(name + ".b", {out});
}

Var Conv2d::operator()(Tape& t, Var x) const {
  return conv2d(t, x, t.parameter(weight), t.parameter(bias), k);
}

PlaneEncoder::PlaneEncoder(ParameterStore& store, const std::string& name, int in_, int channels_)
    : in(in_), channels(channels_) {
  projection = Linear(store, name + ".proj", in, channels);
  for (int b = 0; b < kBlocks; ++b) {
    convs.emplace_back(store, name + ".block" + std::to_string(b) + ".conv0", channels, channels);
    convs.emplace_back(store, name + ".block" + std::to_string(b) + ".conv1", channels, channels);
  }
}

Var PlaneEncoder::operator()(Tape& t, Var planes) const {
  const auto& shape = t.value(planes).shape;
  if (shape.size() != 3 && shape.size() != 4) {
    throw std::invalid_argument("plane encoder: expected [B,H,W,C] or [H,W,C], got " + shape_string(shape));
  }
  const int H = shape[shape.size() - 3], W = shape[shape.size() - 2];
  if (H < 4 || W < 4) throw std::invalid_argument("plane encoder: spatial extents must be >= 4");
  if (shape.back() != in) {
    throw std::invalid_argument("plane encoder: expected " + std::to_string(in) + " channels, got " +
                                shape_string(shape));
  }
  Var x = projection(t, planes);
  for (int b = 0; b < kBlocks; ++b) {
    Var y = convs[2 * b](t, x);
    y = convs[2 * b + 1](t, relu(t, y));
    x = relu(t, add(t, x, y));
  }
  return x;
}

std::size_t PlaneEncoder::parameter_count(int in, int channels) {
  const std::size_t conv = 9ull * channels * channels + channels;
  return static_cast<std::size_t>(in) * channels + channels + 2 * kBlocks * conv;
}

}  // namespace occugrasp::nn
