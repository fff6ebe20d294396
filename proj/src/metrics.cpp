#include "occugrasp/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "occugrasp/oracle.hpp"

namespace occugrasp {

OccupancyMetrics eval_occupancy(const std::vector<double>& probabilities, const std::vector<double>& truth) {
  if (probabilities.size() != truth.size()) throw std::invalid_argument("eval_occupancy: length mismatch");
  OccupancyMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = probabilities[i] > 0.5, g = truth[i] > 0.5;
    if (p && g) ++m.tp;
    else if (p) ++m.fp;
    else if (g) ++m.fn;
    else ++m.tn;
  }
  const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp), fn = static_cast<double>(m.fn);
  m.iou = m.tp + m.fp + m.fn == 0 ? 1.0 : tp / (tp + fp + fn);
  m.precision = m.tp + m.fp == 0 ? 0.0 : tp / (tp + fp);
  m.recall = m.tp + m.fn == 0 ? 0.0 : tp / (tp + fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  if (m.tp + m.fp + m.fn == 0) m.f1 = 1.0;
  return m;
}

std::vector<double> precision_at_k(const std::vector<bool>& success) {
  std::vector<double> out;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < success.size(); ++k) {
    hits += success[k];
    out.push_back(static_cast<double>(hits) / static_cast<double>(k + 1));
  }
  return out;
}

double average_precision(const std::vector<bool>& ranked_success, std::size_t top) {
  const std::size_t n = std::min(top, ranked_success.size());
  if (n == 0) return 0.0;
  const auto p = precision_at_k(std::vector<bool>(ranked_success.begin(), ranked_success.begin() + static_cast<std::ptrdiff_t>(n)));
  double s = 0.0;
  for (double v : p) s += v;
  return s / static_cast<double>(n);
}

double oracle_ap(const SdfScene& scene, const std::vector<GraspPose>& poses, const GripperBody& body,
                 const GraspRegionSpec& spec, std::size_t top) {
  const std::size_t n = std::min(top, poses.size());
  if (n == 0) return 0.0;
  std::vector<OracleDetail> details;
  for (std::size_t k = 0; k < n; ++k) details.push_back(oracle_detail(scene, poses[k], body, spec));
  double total = 0.0;
  for (double mu : kApFrictions) {
    std::vector<bool> s;
    for (const auto& d : details) s.push_back(detail_success(d, mu));
    total += average_precision(s, top);
  }
  return total / static_cast<double>(kApFrictions.size());
}

}  // namespace occugrasp
