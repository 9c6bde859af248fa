#include "simplex/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace simplex {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ccl: return "ccl";
    case LossKind::bpr: return "bpr";
    case LossKind::bce: return "bce";
    case LossKind::sce: return "sce";
    case LossKind::phl: return "phl";
    case LossKind::mse: return "mse";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text) {
  for (LossKind k : kAllLosses) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown loss kind '" + std::string(text) +
                    "' (expected ccl, bpr, bce, sce, phl or mse)");
}

Similarity default_similarity(LossKind kind) {
  return kind == LossKind::ccl || kind == LossKind::phl ? Similarity::cosine : Similarity::dot;
}

void LossConfig::validate() const {
  if (kind == LossKind::ccl) {
    if (!(margin >= 0.0 && margin <= 1.0)) throw ConfigError("loss.margin must be in [0, 1] for ccl");
    if (!(negative_weight > 0.0)) throw ConfigError("loss.negative_weight must be positive");
  }
  if (kind == LossKind::phl && !(margin >= 0.0)) {
    throw ConfigError("loss.margin must be non-negative for phl");
  }
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LossOutput ccl(double y_pos, std::span<const double> y_negs, double margin, double weight) {
  if (y_negs.empty()) throw ConfigError("ccl needs at least one negative sample");
  LossOutput out;
  out.d_negs.assign(y_negs.size(), 0.0);
  const double scale = weight / static_cast<double>(y_negs.size());
  double neg = 0.0;
  for (std::size_t j = 0; j < y_negs.size(); ++j) {
    if (y_negs[j] > margin) {
      neg += y_negs[j] - margin;
      out.d_negs[j] = scale;
    }
  }
  out.loss = (1.0 - y_pos) + scale * neg;
  out.d_pos = -1.0;
  return out;
}

LossOutput bpr(double y_pos, std::span<const double> y_negs) {
  LossOutput out;
  out.d_negs.resize(y_negs.size());
  for (std::size_t j = 0; j < y_negs.size(); ++j) {
    const double x = y_pos - y_negs[j];
    out.loss += softplus(-x);
    const double g = sigmoid(-x);
    out.d_pos -= g;
    out.d_negs[j] = g;
  }
  return out;
}

LossOutput bce(double y_pos, std::span<const double> y_negs) {
  LossOutput out;
  out.d_negs.resize(y_negs.size());
  out.loss = softplus(-y_pos);
  out.d_pos = -sigmoid(-y_pos);
  for (std::size_t j = 0; j < y_negs.size(); ++j) {
    out.loss += softplus(y_negs[j]);
    out.d_negs[j] = sigmoid(y_negs[j]);
  }
  return out;
}

LossOutput sce(double y_pos, std::span<const double> y_negs) {
  LossOutput out;
  out.d_negs.resize(y_negs.size());
  double top = y_pos;
  for (double y : y_negs) top = std::max(top, y);
  // Sum of exp(y - top) over every score except one occurrence of the top.
  const bool pos_on_top = y_pos == top;
  bool skipped = pos_on_top;
  double rest = pos_on_top ? 0.0 : std::exp(y_pos - top);
  for (double y : y_negs) {
    if (!skipped && y == top) {
      skipped = true;
    } else {
      rest += std::exp(y - top);
    }
  }
  // log1p keeps the loss strictly positive when the positive dominates.
  const double log_total = std::log1p(rest);
  out.loss = pos_on_top ? log_total : log_total + top - y_pos;
  out.d_pos = std::exp(y_pos - top - log_total) - 1.0;
  for (std::size_t j = 0; j < y_negs.size(); ++j) {
    out.d_negs[j] = std::exp(y_negs[j] - top - log_total);
  }
  return out;
}

LossOutput phl(double y_pos, std::span<const double> y_negs, double margin) {
  LossOutput out;
  out.d_negs.assign(y_negs.size(), 0.0);
  const double d_pos = 1.0 - y_pos;
  for (std::size_t j = 0; j < y_negs.size(); ++j) {
    const double gap = margin + d_pos - (1.0 - y_negs[j]);
    if (gap > 0.0) {
      out.loss += gap;
      out.d_pos -= 1.0;
      out.d_negs[j] = 1.0;
    }
  }
  return out;
}

LossOutput mse(double y_pos, std::span<const double> y_negs) {
  LossOutput out;
  out.d_negs.resize(y_negs.size());
  out.loss = (y_pos - 1.0) * (y_pos - 1.0);
  out.d_pos = 2.0 * (y_pos - 1.0);
  for (std::size_t j = 0; j < y_negs.size(); ++j) {
    out.loss += y_negs[j] * y_negs[j];
    out.d_negs[j] = 2.0 * y_negs[j];
  }
  return out;
}

LossOutput evaluate_loss(const LossConfig& cfg, double y_pos, std::span<const double> y_negs) {
  switch (cfg.kind) {
    case LossKind::ccl: return ccl(y_pos, y_negs, cfg.margin, cfg.negative_weight);
    case LossKind::bpr: return bpr(y_pos, y_negs);
    case LossKind::bce: return bce(y_pos, y_negs);
    case LossKind::sce: return sce(y_pos, y_negs);
    case LossKind::phl: return phl(y_pos, y_negs, cfg.margin);
    case LossKind::mse: return mse(y_pos, y_negs);
  }
  throw ConfigError("unhandled loss kind");
}

}  // namespace simplex
