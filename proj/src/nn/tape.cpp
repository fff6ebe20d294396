#include "occugrasp/nn/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace occugrasp::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using MapM = Eigen::Map<RowMat>;

MapC as_mat(const Tensor& t) { return MapC(t.data.data(), t.rows(), t.cols()); }
MapM as_mat(Tensor& t) { return MapM(t.data.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const std::string& expected, const std::vector<int>& actual) {
  throw std::invalid_argument(std::string(op) + ": expected " + expected + ", got " + shape_string(actual));
}

void accumulate(Tape& t, Var v, const Tensor& g) {
  if (!t.needs_grad(v)) return;
  Tensor& buf = t.grad_buffer(v);
  for (std::size_t i = 0; i < g.size(); ++i) buf.data[i] += g.data[i];
}

}  // namespace

Tape::Tape(const ParameterStore* store, bool record) : store_(store), record_(record) {
  if (store_ && record_) param_grad_.assign(store_->size(), 0.0);
}

Var Tape::push(Tensor value, bool needs_grad, Backward back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_ && needs_grad;
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Var Tape::input(Tensor t) { return push(std::move(t), true, [](Tape&, const Tensor&) {}); }

Var Tape::parameter(const ParamSlice& s) {
  if (!store_) throw std::logic_error("tape has no parameter store");
  if (auto it = param_nodes_.find(s.offset); it != param_nodes_.end()) return Var{it->second};
  const auto& vals = store_->values();
  Tensor v(s.shape, std::vector<double>(vals.begin() + static_cast<std::ptrdiff_t>(s.offset),
                                        vals.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size())));
  const std::size_t offset = s.offset;
  Var out = push(std::move(v), true, [offset](Tape& t, const Tensor& g) {
    auto& pg = t.param_grad();
    for (std::size_t i = 0; i < g.size(); ++i) pg[offset + i] += g.data[i];
  });
  param_nodes_[s.offset] = out.id;
  return out;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.shape.empty()) n.grad = Tensor(n.value.shape, 0.0);
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.shape.empty()) return Tensor(n.value.shape, 0.0);
  return n.grad;
}

std::vector<double> Tape::backward(Var loss) {
  if (consumed_) throw std::logic_error("gradient tape already consumed");
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  consumed_ = true;
  if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be a single value");
  if (!needs_grad(loss)) return param_grad_;
  grad_buffer(loss).data[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.shape.empty() || !n.back) continue;
    n.back(*this, n.grad);
  }
  return param_grad_;
}

Var linear(Tape& t, Var x, Var W, Var b) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(W);
  const Tensor& bv = t.value(b);
  if (wv.shape.size() != 2) shape_error("linear", "2-D weight", wv.shape);
  const int in = wv.shape[0], out = wv.shape[1];
  if (xv.cols() != in) shape_error("linear", "input width " + std::to_string(in), xv.shape);
  if (static_cast<int>(bv.size()) != out) shape_error("linear", "bias of " + std::to_string(out), bv.shape);
  std::vector<int> oshape = xv.shape;
  oshape.back() = out;
  Tensor y(oshape);
  if (y.rows() > 0) {
    as_mat(y).noalias() = as_mat(xv) * as_mat(wv);
    as_mat(y).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data.data(), out);
  }
  const bool ng = t.needs_grad(x) || t.needs_grad(W) || t.needs_grad(b);
  return t.push(std::move(y), ng, [x, W, b](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(W);
    if (g.rows() == 0) return;
    if (tp.needs_grad(x)) as_mat(tp.grad_buffer(x)).noalias() += as_mat(g) * as_mat(wv).transpose();
    if (tp.needs_grad(W)) as_mat(tp.grad_buffer(W)).noalias() += as_mat(xv).transpose() * as_mat(g);
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad_buffer(b);
      Eigen::Map<Eigen::RowVectorXd>(gb.data.data(), g.cols()) += as_mat(g).colwise().sum();
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (av.shape != bv.shape) shape_error("add", shape_string(av.shape), bv.shape);
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
  return t.push(std::move(y), t.needs_grad(a) || t.needs_grad(b), [a, b](Tape& tp, const Tensor& g) {
    accumulate(tp, a, g);
    accumulate(tp, b, g);
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor y = t.value(a);
  for (double& v : y.data) v *= s;
  return t.push(std::move(y), t.needs_grad(a), [a, s](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += s * g.data[i];
  });
}

Var relu(Tape& t, Var a) {
  Tensor y = t.value(a);
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return t.push(std::move(y), t.needs_grad(a), [a](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av.data[i] > 0.0) ga.data[i] += g.data[i];
  });
}

Var sigmoid(Tape& t, Var a) {
  Tensor y = t.value(a);
  for (double& v : y.data) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  const int self = static_cast<int>(t.node_count());
  return t.push(std::move(y), t.needs_grad(a), [a, self](Tape& tp, const Tensor& g) {
    const Tensor& yv = tp.value(Var{self});
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * yv.data[i] * (1.0 - yv.data[i]);
  });
}

Var reshape(Tape& t, Var a, std::vector<int> shape) {
  Tensor y = t.value(a);
  if (shape_size(shape) != y.size()) shape_error("reshape", shape_string(y.shape) + " element count", shape);
  y.shape = std::move(shape);
  return t.push(std::move(y), t.needs_grad(a), [a](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  });
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int rows = t.value(parts[0]).rows();
  int cols = 0;
  bool ng = false;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    if (v.rows() != rows) shape_error("concat_cols", std::to_string(rows) + " rows", v.shape);
    cols += v.cols();
    ng = ng || t.needs_grad(p);
  }
  Tensor y({rows, cols});
  int off = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    const int c = v.cols();
    for (int r = 0; r < rows; ++r)
      std::copy_n(v.data.data() + static_cast<std::size_t>(r) * c, c,
                  y.data.data() + static_cast<std::size_t>(r) * cols + off);
    off += c;
  }
  return t.push(std::move(y), ng, [parts, rows, cols](Tape& tp, const Tensor& g) {
    int off = 0;
    for (Var p : parts) {
      const int c = tp.value(p).cols();
      if (tp.needs_grad(p)) {
        Tensor& gp = tp.grad_buffer(p);
        for (int r = 0; r < rows; ++r)
          for (int j = 0; j < c; ++j)
            gp.data[static_cast<std::size_t>(r) * c + j] += g.data[static_cast<std::size_t>(r) * cols + off + j];
      }
      off += c;
    }
  });
}

Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int cols = t.value(parts[0]).cols();
  int rows = 0;
  bool ng = false;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    if (v.cols() != cols) shape_error("concat_rows", std::to_string(cols) + " columns", v.shape);
    rows += v.rows();
    ng = ng || t.needs_grad(p);
  }
  Tensor y({rows, cols});
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    std::copy(v.data.begin(), v.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += v.size();
  }
  return t.push(std::move(y), ng, [parts](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t n = tp.value(p).size();
      if (tp.needs_grad(p)) {
        Tensor& gp = tp.grad_buffer(p);
        for (std::size_t i = 0; i < n; ++i) gp.data[i] += g.data[off + i];
      }
      off += n;
    }
  });
}

Var slice_rows(Tape& t, Var a, int begin, int count) {
  const Tensor& av = t.value(a);
  if (begin < 0 || count < 0 || begin + count > av.rows()) {
    shape_error("slice_rows", "rows [" + std::to_string(begin) + "," + std::to_string(begin + count) + ")", av.shape);
  }
  const int c = av.cols();
  Tensor y({count, c});
  std::copy_n(av.data.data() + static_cast<std::size_t>(begin) * c, static_cast<std::size_t>(count) * c,
              y.data.data());
  return t.push(std::move(y), t.needs_grad(a), [a, begin, c](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[static_cast<std::size_t>(begin) * c + i] += g.data[i];
  });
}

Var gather_rows(Tape& t, Var a, std::vector<int> index) {
  const Tensor& av = t.value(a);
  const int c = av.cols(), n = av.rows();
  Tensor y({static_cast<int>(index.size()), c});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= n) throw std::out_of_range("gather_rows: index out of range");
    std::copy_n(av.data.data() + static_cast<std::size_t>(index[r]) * c, c, y.data.data() + r * c);
  }
  return t.push(std::move(y), t.needs_grad(a), [a, c, index = std::move(index)](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t r = 0; r < index.size(); ++r)
      for (int j = 0; j < c; ++j) ga.data[static_cast<std::size_t>(index[r]) * c + j] += g.data[r * c + j];
  });
}

Var weighted_rows(Tape& t, Var a, int taps, std::vector<int> index, std::vector<double> weight) {
  const Tensor& av = t.value(a);
  const int c = av.cols(), n = av.rows();
  if (taps < 1 || index.size() % taps != 0 || weight.size() != index.size()) {
    throw std::invalid_argument("weighted_rows: tap layout mismatch");
  }
  const int out_rows = static_cast<int>(index.size() / taps);
  Tensor y({out_rows, c});
  for (int r = 0; r < out_rows; ++r) {
    double* dst = y.data.data() + static_cast<std::size_t>(r) * c;
    for (int k = 0; k < taps; ++k) {
      const std::size_t e = static_cast<std::size_t>(r) * taps + k;
      if (index[e] < 0 || index[e] >= n) throw std::out_of_range("weighted_rows: index out of range");
      const double w = weight[e];
      const double* src = av.data.data() + static_cast<std::size_t>(index[e]) * c;
      for (int j = 0; j < c; ++j) dst[j] += w * src[j];
    }
  }
  return t.push(std::move(y), t.needs_grad(a),
                [a, c, taps, index = std::move(index), weight = std::move(weight)](Tape& tp, const Tensor& g) {
                  Tensor& ga = tp.grad_buffer(a);
                  for (std::size_t e = 0; e < index.size(); ++e) {
                    const double* src = g.data.data() + (e / taps) * c;
                    double* dst = ga.data.data() + static_cast<std::size_t>(index[e]) * c;
                    for (int j = 0; j < c; ++j) dst[j] += weight[e] * src[j];
                  }
                });
}

Var max_pool(Tape& t, Var a, const std::vector<int>& group, int groups, std::vector<int>* argmax_out) {
  const Tensor& av = t.value(a);
  const int c = av.cols(), n = av.rows();
  if (static_cast<int>(group.size()) != n) throw std::invalid_argument("max_pool: group list length mismatch");
  std::vector<int> arg(static_cast<std::size_t>(groups) * c, -1);
  Tensor y({groups, c});
  for (int r = 0; r < n; ++r) {
    const int gi = group[r];
    if (gi < 0 || gi >= groups) throw std::out_of_range("max_pool: group id out of range");
    for (int j = 0; j < c; ++j) {
      const std::size_t o = static_cast<std::size_t>(gi) * c + j;
      const double v = av.data[static_cast<std::size_t>(r) * c + j];
      if (arg[o] < 0 || v > y.data[o]) {
        y.data[o] = v;
        arg[o] = r;
      }
    }
  }
  if (argmax_out) *argmax_out = arg;
  return t.push(std::move(y), t.needs_grad(a), [a, c, arg = std::move(arg)](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t o = 0; o < arg.size(); ++o)
      if (arg[o] >= 0) ga.data[static_cast<std::size_t>(arg[o]) * c + o % c] += g.data[o];
  });
}

namespace {

struct ConvDims {
  int B, H, W, C;
};

ConvDims conv_dims(const Tensor& x) {
  if (x.shape.size() == 3) return {1, x.shape[0], x.shape[1], x.shape[2]};
  if (x.shape.size() == 4) return {x.shape[0], x.shape[1], x.shape[2], x.shape[3]};
  shape_error("conv2d", "[B,H,W,C] or [H,W,C] input", x.shape);
}

// Row (b, y, x), column (dy*k + dx)*C + c.
RowMat im2col(const Tensor& x, const ConvDims& d, int k) {
  const int pad = k / 2;
  RowMat cols = RowMat::Zero(static_cast<Eigen::Index>(d.B) * d.H * d.W, static_cast<Eigen::Index>(k) * k * d.C);
  for (int b = 0; b < d.B; ++b)
    for (int y = 0; y < d.H; ++y)
      for (int xx = 0; xx < d.W; ++xx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(b) * d.H + y) * d.W + xx;
        for (int dy = 0; dy < k; ++dy) {
          const int sy = y + dy - pad;
          if (sy < 0 || sy >= d.H) continue;
          for (int dx = 0; dx < k; ++dx) {
            const int sx = xx + dx - pad;
            if (sx < 0 || sx >= d.W) continue;
            const double* src = x.data.data() + ((static_cast<std::size_t>(b) * d.H + sy) * d.W + sx) * d.C;
            std::copy_n(src, d.C, cols.data() + row * cols.cols() + (dy * k + dx) * d.C);
          }
        }
      }
  return cols;
}

void col2im_add(const RowMat& cols, Tensor& gx, const ConvDims& d, int k) {
  const int pad = k / 2;
  for (int b = 0; b < d.B; ++b)
    for (int y = 0; y < d.H; ++y)
      for (int xx = 0; xx < d.W; ++xx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(b) * d.H + y) * d.W + xx;
        for (int dy = 0; dy < k; ++dy) {
          const int sy = y + dy - pad;
          if (sy < 0 || sy >= d.H) continue;
          for (int dx = 0; dx < k; ++dx) {
            const int sx = xx + dx - pad;
            if (sx < 0 || sx >= d.W) continue;
            double* dst = gx.data.data() + ((static_cast<std::size_t>(b) * d.H + sy) * d.W + sx) * d.C;
            const double* src = cols.data() + row * cols.cols() + (dy * k + dx) * d.C;
            for (int c = 0; c < d.C; ++c) dst[c] += src[c];
          }
        }
      }
}

}  // namespace

Var conv2d(Tape& t, Var x, Var W, Var b, int k) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(W);
  const Tensor& bv = t.value(b);
  const ConvDims d = conv_dims(xv);
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd");
  if (wv.shape.size() != 2 || wv.shape[0] != k * k * d.C) {
    shape_error("conv2d", "weight [" + std::to_string(k * k * d.C) + ",Cout]", wv.shape);
  }
  const int cout = wv.shape[1];
  if (static_cast<int>(bv.size()) != cout) shape_error("conv2d", "bias of " + std::to_string(cout), bv.shape);
  std::vector<int> oshape = xv.shape;
  oshape.back() = cout;
  Tensor y(oshape);
  {
    const RowMat cols = im2col(xv, d, k);
    as_mat(y).noalias() = cols * as_mat(wv);
    as_mat(y).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data.data(), cout);
  }
  const bool ng = t.needs_grad(x) || t.needs_grad(W) || t.needs_grad(b);
  return t.push(std::move(y), ng, [x, W, b, d, k](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(W);
    if (tp.needs_grad(W)) {
      const RowMat cols = im2col(xv, d, k);
      as_mat(tp.grad_buffer(W)).noalias() += cols.transpose() * as_mat(g);
    }
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad_buffer(b);
      Eigen::Map<Eigen::RowVectorXd>(gb.data.data(), g.cols()) += as_mat(g).colwise().sum();
    }
    if (tp.needs_grad(x)) {
      const RowMat gcols = as_mat(g) * as_mat(wv).transpose();
      col2im_add(gcols, tp.grad_buffer(x), d, k);
    }
  });
}

Var sum(Tape& t, Var a) {
  double s = 0.0;
  for (double v : t.value(a).data) s += v;
  return t.push(Tensor::scalar(s), t.needs_grad(a), [a](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(a);
    for (double& v : ga.data) v += g.data[0];
  });
}

Var mean(Tape& t, Var a) {
  const std::size_t n = t.value(a).size();
  if (n == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(t, sum(t, a), 1.0 / static_cast<double>(n));
}

namespace {
constexpr double kProbClamp = 1e-7;
}

Var bce_mean(Tape& t, Var p, const std::vector<double>& labels) {
  const Tensor& pv = t.value(p);
  if (pv.size() != labels.size()) {
    throw std::invalid_argument("bce_mean: length mismatch, expected " + std::to_string(pv.size()) + ", got " +
                                std::to_string(labels.size()));
  }
  if (labels.empty()) throw std::invalid_argument("bce_mean: empty input");
  const double n = static_cast<double>(labels.size());
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double q = std::clamp(pv.data[i], kProbClamp, 1.0 - kProbClamp);
    s -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  return t.push(Tensor::scalar(s / n), t.needs_grad(p), [p, labels, n](Tape& tp, const Tensor& g) {
    const Tensor& pv = tp.value(p);
    Tensor& gp = tp.grad_buffer(p);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double q = pv.data[i];
      if (q < kProbClamp || q > 1.0 - kProbClamp) continue;
      gp.data[i] += g.data[0] * (-labels[i] / q + (1.0 - labels[i]) / (1.0 - q)) / n;
    }
  });
}

double smooth_l1(double r) {
  const double a = std::abs(r);
  return a < 1.0 ? 0.5 * r * r : a - 0.5;
}

Var smooth_l1_mean(Tape& t, Var pred, const std::vector<double>& target, const std::vector<double>& mask) {
  const Tensor& pv = t.value(pred);
  if (pv.size() != target.size() || (!mask.empty() && mask.size() != target.size())) {
    throw std::invalid_argument("smooth_l1_mean: length mismatch, expected " + std::to_string(pv.size()));
  }
  std::size_t count = 0;
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!mask.empty() && mask[i] == 0.0) continue;
    ++count;
    s += smooth_l1(pv.data[i] - target[i]);
  }
  const double n = count ? static_cast<double>(count) : 1.0;
  return t.push(Tensor::scalar(count ? s / n : 0.0), t.needs_grad(pred) && count > 0,
                [pred, target, mask, n](Tape& tp, const Tensor& g) {
                  const Tensor& pv = tp.value(pred);
                  Tensor& gp = tp.grad_buffer(pred);
                  for (std::size_t i = 0; i < target.size(); ++i) {
                    if (!mask.empty() && mask[i] == 0.0) continue;
                    const double r = pv.data[i] - target[i];
                    const double d = std::abs(r) < 1.0 ? r : (r > 0 ? 1.0 : -1.0);
                    gp.data[i] += g.data[0] * d / n;
                  }
                });
}

}  // namespace occugrasp::nn
