#pragma once

#include <vector>

#include "occugrasp/nn/tape.hpp"

namespace occugrasp {

struct LossWeights {
  double affordance = 10.0;  // lambda 1
  double view = 100.0;       // lambda 2
  double pose = 10.0;        // lambda 3, on width + score
};

struct LossReport {
  double occupancy = 0.0;
  double affordance = 0.0;
  double view = 0.0;
  double width = 0.0;
  double score = 0.0;
  double total = 0.0;
};

/// total = L_o + l1 L_a + l2 L_v + l3 (L_w + L_s).
double combine_losses(double l_o, double l_a, double l_v, double l_w, double l_s, const LossWeights& w);
LossReport total_loss(double l_o, double l_a, double l_v, double l_w, double l_s, const LossWeights& w);

/// Mean binary cross-entropy of probabilities [M, 1] against 0/1 labels.
nn::Var occupancy_loss(nn::Tape& t, nn::Var probabilities, const std::vector<double>& labels);

/// Grasp heads and their label tensors for one batch of candidates.
struct GraspLossInputs {
  nn::Var affordance;                   // [N, 1]
  std::vector<double> affordance_labels;
  nn::Var view_pre;                     // [B, V]
  nn::Var view_post;                    // [B, V], or id -1 when refinement is off
  std::vector<double> view_labels;      // [B * V]
  nn::Var scores;                       // [B, 48]
  nn::Var widths;                       // [B, 48]
  std::vector<double> score_labels;     // [B * 48], 0/1
  std::vector<double> width_labels;     // [B * 48]
};

struct GraspLossVars {
  nn::Var affordance, view, width, score;
};

/// L_a mean BCE; L_v mean smooth-L1 averaged over the pre- and
/// post-refinement heads; L_s mean smooth-L1 over score cells; L_w
/// smooth-L1 over width cells with positive score labels (0 if none).
GraspLossVars grasp_losses(nn::Tape& t, const GraspLossInputs& in);

/// Weighted sum as a tape scalar.
nn::Var weighted_total(nn::Tape& t, nn::Var l_o, const GraspLossVars& g, const LossWeights& w);

}  // namespace occugrasp
