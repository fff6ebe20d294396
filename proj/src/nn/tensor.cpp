#include "occugrasp/nn/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "occugrasp/rng.hpp"

namespace occugrasp::nn {

std::size_t shape_size(const std::vector<int>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must not be empty");
  std::size_t n = 1;
  for (int e : shape) {
    if (e < 0) throw std::invalid_argument("negative tensor extent");
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_size(shape)) {
    throw std::invalid_argument("tensor value count does not match shape " + shape_string(shape));
  }
}

int Tensor::rows() const {
  const int c = cols();
  return c == 0 ? 0 : static_cast<int>(data.size() / static_cast<std::size_t>(c));
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

ParamSlice ParameterStore::add_weight(const std::string& name, std::vector<int> shape, int fan_in, int fan_out) {
  ParamSlice s{values_.size(), std::move(shape)};
  values_.resize(values_.size() + s.size(), 0.0);
  entries_.push_back({name, s, fan_in, fan_out, false});
  return s;
}

ParamSlice ParameterStore::add_bias(const std::string& name, std::vector<int> shape) {
  ParamSlice s{values_.size(), std::move(shape)};
  values_.resize(values_.size() + s.size(), 0.0);
  entries_.push_back({name, s, 0, 0, true});
  return s;
}

void ParameterStore::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& e : entries_) {
    double* p = values_.data() + e.slice.offset;
    if (e.is_bias) {
      std::fill(p, p + e.slice.size(), 0.0);
      continue;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(e.fan_in + e.fan_out));
    for (std::size_t i = 0; i < e.slice.size(); ++i) p[i] = rng.uniform(-a, a);
  }
}

}  // namespace occugrasp::nn
