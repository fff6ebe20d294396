#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "occugrasp/grasp_types.hpp"
#include "occugrasp/scene.hpp"

namespace occugrasp {

struct OccupancyMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Counts at threshold 0.5 (strict) against 0/1 ground truth. Ratios with a
/// zero denominator are 0; IOU is 1 when both sets are empty.
OccupancyMetrics eval_occupancy(const std::vector<double>& probabilities, const std::vector<double>& truth);

inline constexpr std::array<double, 6> kApFrictions{0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
inline constexpr std::size_t kApTop = 50;

/// Precision@k for k = 1..n of a ranked success list.
std::vector<double> precision_at_k(const std::vector<bool>& success);

/// Mean of Precision@k over k = 1..min(top, n).
double average_precision(const std::vector<bool>& ranked_success, std::size_t top = kApTop);

/// Mean over the friction set of average_precision, with success from the
/// grasp oracle. Poses are taken in the given order. Empty lists score 0.
double oracle_ap(const SdfScene& scene, const std::vector<GraspPose>& poses, const GripperBody& body,
                 const GraspRegionSpec& spec, std::size_t top = kApTop);

}  // namespace occugrasp
