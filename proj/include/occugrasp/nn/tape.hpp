#pragma once

#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "occugrasp/nn/tensor.hpp"

namespace occugrasp::nn {

struct Var {
  int id = -1;
};

/// Reverse-mode recording of tensor operations. Nodes are appended in
/// evaluation order, so reverse creation order is a valid topological order
/// for the backward sweep. One tape serves one forward/backward pass and
/// must stay on one thread.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  /// With record = false no backward closures are stored (inference).
  explicit Tape(const ParameterStore* store = nullptr, bool record = true);

  Var constant(Tensor t);
  /// Differentiable leaf; its gradient is readable through grad() after backward.
  Var input(Tensor t);
  /// Leaf bound to a parameter slice; gradients land in the flat vector
  /// returned by backward(). Repeated requests for a slice share one node.
  Var parameter(const ParamSlice& s);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the loss with respect to v; zeros if v did not influence it.
  Tensor grad(Var v) const;
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// d(loss)/d(parameters) over the whole store. The loss must be a single
  /// value. A tape can be swept once; a second call throws.
  std::vector<double> backward(Var loss);

  // Used by the op implementations.
  Var push(Tensor value, bool needs_grad, Backward back);
  /// Accumulation buffer for v's gradient, allocated on first use.
  Tensor& grad_buffer(Var v);
  std::vector<double>& param_grad() { return param_grad_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    Backward back;
  };
  const ParameterStore* store_;
  bool record_;
  bool consumed_ = false;
  std::deque<Node> nodes_;
  std::unordered_map<std::size_t, int> param_nodes_;
  std::vector<double> param_grad_;
};

// Matrix-style ops treat the last extent as columns and fold the rest into rows.

/// x·W + b with W [in, out], b [out].
Var linear(Tape& t, Var x, Var W, Var b);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var reshape(Tape& t, Var a, std::vector<int> shape);
Var concat_cols(Tape& t, const std::vector<Var>& parts);
Var concat_rows(Tape& t, const std::vector<Var>& parts);
Var slice_rows(Tape& t, Var a, int begin, int count);
Var gather_rows(Tape& t, Var a, std::vector<int> index);
/// out[r] = sum over k < taps of weight[r*taps+k] * a[index[r*taps+k]].
/// Weights are constants (used for bilinear reads).
Var weighted_rows(Tape& t, Var a, int taps, std::vector<int> index, std::vector<double> weight);

/// Per-group, per-column max over rows with group id in [0, groups). Empty
/// groups produce 0. Gradient flows to the argmax row; ties keep the lowest
/// row index. argmax (groups x cols, -1 for empty) is written if requested.
Var max_pool(Tape& t, Var a, const std::vector<int>& group, int groups, std::vector<int>* argmax = nullptr);

/// Zero-padded stride-1 k x k convolution. x is [B,H,W,Cin] or [H,W,Cin];
/// W is [k*k*Cin, Cout] with row (dy*k + dx)*Cin + ci; b is [Cout].
Var conv2d(Tape& t, Var x, Var W, Var b, int k);

Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);
/// Mean binary cross-entropy of probabilities clamped to [1e-7, 1-1e-7].
Var bce_mean(Tape& t, Var p, const std::vector<double>& labels);
/// Mean smooth-L1 (kink at 1) over entries with mask != 0 (all if mask is
/// empty); 0 when nothing is selected.
Var smooth_l1_mean(Tape& t, Var pred, const std::vector<double>& target, const std::vector<double>& mask = {});

double smooth_l1(double residual);

}  // namespace occugrasp::nn
