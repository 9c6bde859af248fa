#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simplex/batch.hpp"
#include "simplex/loss.hpp"
#include "simplex/model.hpp"

namespace simplex {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
// Only evaluates `fn`; throws NumericError on a non-finite evaluation.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                     std::span<const double> theta, double step);

// |a - f| / max(|a|, |f|, 1e-8)
double relative_error(double analytic, double numeric);

struct TensorCheck {
  std::string tensor;
  double max_rel_error = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct CaseReport {
  EncoderConfig encoder;
  LossConfig loss;
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  std::string worst;  // e.g. "item_emb[3,1]"
  bool passed = false;
  // Largest |numeric gradient| on the padding row (0 when masking works).
  double padding_grad = 0.0;

  std::string describe() const;
};

struct GradCheckOptions {
  std::uint64_t seed = 20211;
  double step = 1e-4;
  double tolerance = 1e-4;
  double g = 0.5;
  // Applied to the analytic gradient before comparison (fault injection).
  std::function<void(ModelParams<double>&)> corrupt_analytic;
};

struct GradCheckReport {
  std::vector<CaseReport> cases;
  bool passed() const;
};

// A tiny random problem: 3 users, 6 items, d = 4, K = 3, 3 examples with
// 2 negatives each; the second and third histories contain padding.
struct GradCheckInstance {
  ModelParams<double> params;
  TrainBatch batch;
};

// Regenerates until every margin-based score sits at least 10 * step away
// from its hinge.
GradCheckInstance make_gradcheck_instance(const EncoderConfig& enc, const LossConfig& loss,
                                          std::uint64_t seed, double step);

CaseReport check_gradients(const EncoderConfig& enc, const LossConfig& loss,
                           const GradCheckOptions& opts);

// Every aggregation x loss x similarity combination (36 cases).
GradCheckReport grad_check(const GradCheckOptions& opts);

// Loss settings used by the check: margins chosen so both sides of each
// hinge are exercised.
LossConfig gradcheck_loss_config(LossKind kind);

}  // namespace simplex
