#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "simplex/model.hpp"

namespace simplex {

enum class LossKind { ccl, bpr, bce, sce, phl, mse };

inline constexpr std::array<LossKind, 6> kAllLosses = {LossKind::ccl, LossKind::bpr,
                                                       LossKind::bce, LossKind::sce,
                                                       LossKind::phl, LossKind::mse};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

// CCL and PHL compare normalized vectors; the other losses score with raw
// dot products in their usual formulations.
Similarity default_similarity(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::ccl;
  // CCL: cosine threshold in [0, 1]. PHL: distance margin >= 0.
  double margin = 0.9;
  // CCL weight on the averaged negative term.
  double negative_weight = 150.0;

  void validate() const;
};

// Per positive pair: loss value and its derivative w.r.t. every score.
struct LossOutput {
  double loss = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_negs;
};

// (1 - y_pos) + w/|N| * sum_j max(0, y_neg_j - m). Throws ConfigError when
// there are no negatives.
LossOutput ccl(double y_pos, std::span<const double> y_negs, double margin, double weight);

// -sum_j log sigmoid(y_pos - y_neg_j)
LossOutput bpr(double y_pos, std::span<const double> y_negs);

// -log sigmoid(y_pos) - sum_j log(1 - sigmoid(y_neg_j))
LossOutput bce(double y_pos, std::span<const double> y_negs);

// -log softmax over {pos} U negs, evaluated at the positive.
LossOutput sce(double y_pos, std::span<const double> y_negs);

// sum_j max(0, m + d_pos - d_neg_j) with d = 1 - y.
LossOutput phl(double y_pos, std::span<const double> y_negs, double margin);

// (y_pos - 1)^2 + sum_j y_neg_j^2
LossOutput mse(double y_pos, std::span<const double> y_negs);

LossOutput evaluate_loss(const LossConfig& cfg, double y_pos, std::span<const double> y_negs);

// Numerically stable log(1 + e^x) and logistic function.
double softplus(double x);
double sigmoid(double x);

}  // namespace simplex
