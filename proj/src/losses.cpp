#include "occugrasp/losses.hpp"

#include <stdexcept>
#include <string>

namespace occugrasp {

using nn::Tape;
using nn::Var;

double combine_losses(double l_o, double l_a, double l_v, double l_w, double l_s, const LossWeights& w) {
  return l_o + w.affordance * l_a + w.view * l_v + w.pose * (l_w + l_s);
}

LossReport total_loss(double l_o, double l_a, double l_v, double l_w, double l_s, const LossWeights& w) {
  return {l_o, l_a, l_v, l_w, l_s, combine_losses(l_o, l_a, l_v, l_w, l_s, w)};
}

namespace {

void same_size(const Tape& t, Var v, std::size_t n, const char* what) {
  if (t.value(v).size() != n) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(t.value(v).size()) + " predictions, " +
                                std::to_string(n) + " labels");
  }
}

}  // namespace

Var occupancy_loss(Tape& t, Var probabilities, const std::vector<double>& labels) {
  same_size(t, probabilities, labels.size(), "occupancy loss");
  return nn::bce_mean(t, probabilities, labels);
}

GraspLossVars grasp_losses(Tape& t, const GraspLossInputs& in) {
  same_size(t, in.affordance, in.affordance_labels.size(), "affordance loss");
  same_size(t, in.view_pre, in.view_labels.size(), "view loss");
  same_size(t, in.scores, in.score_labels.size(), "score loss");
  same_size(t, in.widths, in.width_labels.size(), "width loss");
  GraspLossVars g;
  g.affordance = nn::bce_mean(t, in.affordance, in.affordance_labels);
  g.view = nn::smooth_l1_mean(t, in.view_pre, in.view_labels);
  if (in.view_post.id >= 0) {
    same_size(t, in.view_post, in.view_labels.size(), "view loss");
    g.view = nn::scale(t, nn::add(t, g.view, nn::smooth_l1_mean(t, in.view_post, in.view_labels)), 0.5);
  }
  g.score = nn::smooth_l1_mean(t, in.scores, in.score_labels);
  g.width = nn::smooth_l1_mean(t, in.widths, in.width_labels, in.score_labels);
  return g;
}

Var weighted_total(Tape& t, Var l_o, const GraspLossVars& g, const LossWeights& w) {
  Var total = nn::add(t, l_o, nn::scale(t, g.affordance, w.affordance));
  total = nn::add(t, total, nn::scale(t, g.view, w.view));
  return nn::add(t, total, nn::scale(t, nn::add(t, g.width, g.score), w.pose));
}

}  // namespace occugrasp
