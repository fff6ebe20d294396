#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace occugrasp::nn {

/// Dense row-major f64 array. For matrix-style ops the last extent is the
/// column count and all leading extents fold into rows; an empty shape is
/// not allowed, a zero leading extent is (empty batches).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);
  Tensor(std::vector<int> s, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

  std::size_t size() const { return data.size(); }
  int cols() const { return shape.back(); }
  int rows() const;
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }
  bool all_finite() const;
};

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

struct ParamSlice {
  std::size_t offset = 0;
  std::vector<int> shape;
  std::size_t size() const { return shape_size(shape); }
};

/// Flat parameter vector with named slices. Registration order fixes the
/// layout and the initialization order.
class ParameterStore {
 public:
  /// Weight slice initialized uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
  ParamSlice add_weight(const std::string& name, std::vector<int> shape, int fan_in, int fan_out);
  /// Zero-initialized slice.
  ParamSlice add_bias(const std::string& name, std::vector<int> shape);

  /// Re-initializes every slice from `seed` in registration order.
  void initialize(std::uint64_t seed);

  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  struct Entry {
    std::string name;
    ParamSlice slice;
    int fan_in = 0;
    int fan_out = 0;
    bool is_bias = false;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<double> values_;
  std::vector<Entry> entries_;
};

}  // namespace occugrasp::nn
