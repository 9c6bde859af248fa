#include "simplex/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "simplex/encoder.hpp"
#include "simplex/objective.hpp"
#include "simplex/rng.hpp"

namespace simplex {

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                     std::span<const double> theta, double step) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = fn(x);
    x[i] = orig - step;
    const double down = fn(x);
    x[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("non-finite evaluation at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

std::string CaseReport::describe() const {
  std::ostringstream out;
  out << std::left << std::setw(16) << to_string(encoder.aggregation) << " " << std::setw(4)
      << to_string(loss.kind) << " " << std::setw(6) << to_string(encoder.similarity)
      << " max_rel_err=" << std::scientific << std::setprecision(3) << max_rel_error
      << " worst=" << worst << " " << (passed ? "PASS" : "FAIL");
  return out.str();
}

bool GradCheckReport::passed() const {
  return !cases.empty() &&
         std::all_of(cases.begin(), cases.end(), [](const CaseReport& c) { return c.passed; });
}

LossConfig gradcheck_loss_config(LossKind kind) {
  LossConfig cfg;
  cfg.kind = kind;
  cfg.margin = kind == LossKind::phl ? 0.5 : 0.1;
  cfg.negative_weight = 3.0;
  return cfg;
}

namespace {

constexpr std::size_t kUsers = 3;
constexpr std::size_t kItems = 6;
constexpr std::size_t kDim = 4;
constexpr std::size_t kWindow = 3;
constexpr std::size_t kNegatives = 2;

GradCheckInstance random_instance(std::mt19937_64& rng) {
  GradCheckInstance inst{ModelParams<double>(kUsers, kItems, kDim), {}};
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto* t : inst.params.tensors()) {
    for (auto& v : t->data) v = normal(rng);
  }
  auto pad = inst.params.item_emb.row(kItems);
  std::fill(pad.begin(), pad.end(), 0.0);

  std::uniform_int_distribution<Index> item(0, kItems - 1);
  auto& b = inst.batch;
  b.num_negatives = kNegatives;
  b.window = kWindow;
  b.users = {0, 1, 2};
  for (std::size_t e = 0; e < b.users.size(); ++e) {
    const Index pos = item(rng);
    b.pos_items.push_back(pos);
    // Negatives never equal the positive, as with exclusion in the sampler.
    for (std::size_t j = 0; j < kNegatives; ++j) {
      Index neg = item(rng);
      while (neg == pos) neg = item(rng);
      b.neg_items.push_back(neg);
    }
    // Example e has kWindow - e real slots followed by padding.
    for (std::size_t k = 0; k < kWindow; ++k) {
      const bool real = k < kWindow - e;
      b.history_items.push_back(real ? item(rng) : static_cast<Index>(kItems));
      b.history_mask.push_back(real ? 1 : 0);
    }
  }
  return inst;
}

bool near_kink(const GradCheckInstance& inst, const EncoderConfig& enc, const LossConfig& loss,
               double step) {
  if (loss.kind != LossKind::ccl && loss.kind != LossKind::phl) return false;
  auto tape = forward(inst.batch, inst.params, enc);
  const double guard = 10.0 * step;
  for (std::size_t e = 0; e < tape.batch_size; ++e) {
    auto s = tape.scores_of(e);
    for (std::size_t j = 1; j < s.size(); ++j) {
      const double gap = loss.kind == LossKind::ccl ? s[j] - loss.margin
                                                    : loss.margin - s[0] + s[j];
      if (std::abs(gap) < guard) return true;
    }
  }
  return false;
}

}  // namespace

GradCheckInstance make_gradcheck_instance(const EncoderConfig& enc, const LossConfig& loss,
                                          std::uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    GradCheckInstance inst = random_instance(rng);
    if (!near_kink(inst, enc, loss, step)) return inst;
  }
  throw Error("could not generate a kink-free gradient-check instance");
}

CaseReport check_gradients(const EncoderConfig& enc, const LossConfig& loss,
                           const GradCheckOptions& opts) {
  GradCheckInstance inst = make_gradcheck_instance(enc, loss, opts.seed, opts.step);

  // Analytic route: forward, loss derivative, backward.
  auto tape = forward(inst.batch, inst.params, enc);
  auto obj = batch_objective(tape, loss);
  ModelParams<double> analytic = zeros_like(inst.params);
  backward<double>(inst.batch, tape, obj.dscores, inst.params, enc, analytic);
  if (opts.corrupt_analytic) opts.corrupt_analytic(analytic);

  // Numeric route: the same forward path evaluated at perturbed parameters.
  ModelParams<double> scratch = inst.params;
  auto objective = [&](std::span<const double> theta) {
    unflatten(theta, scratch);
    return batch_loss(inst.batch, scratch, enc, loss);
  };
  auto theta = flatten(inst.params);
  auto numeric_flat = finite_diff_grad(objective, theta, opts.step);
  ModelParams<double> numeric = zeros_like(inst.params);
  unflatten<double>(numeric_flat, numeric);

  CaseReport report;
  report.encoder = enc;
  report.loss = loss;
  auto a_tensors = analytic.tensors();
  auto n_tensors = numeric.tensors();
  for (std::size_t t = 0; t < a_tensors.size(); ++t) {
    TensorCheck check;
    check.tensor = std::string(kTensorNames[t]);
    const auto& a = *a_tensors[t];
    const auto& n = *n_tensors[t];
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double err = relative_error(a.data[k], n.data[k]);
      if (err > check.max_rel_error || k == 0) {
        check.max_rel_error = err;
        check.worst_row = k / a.cols;
        check.worst_col = k % a.cols;
        check.analytic = a.data[k];
        check.numeric = n.data[k];
      }
    }
    if (t == 0 || check.max_rel_error > report.max_rel_error) {
      report.max_rel_error = check.max_rel_error;
      report.worst = check.tensor + "[" + std::to_string(check.worst_row) + "," +
                     std::to_string(check.worst_col) + "]";
    }
    report.tensors.push_back(check);
  }
  for (std::size_t c = 0; c < kDim; ++c) {
    report.padding_grad = std::max({report.padding_grad, std::abs(numeric.item_emb(kItems, c)),
                                    std::abs(analytic.item_emb(kItems, c))});
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

GradCheckReport grad_check(const GradCheckOptions& opts) {
  GradCheckReport report;
  std::uint64_t case_index = 0;
  for (Aggregation agg : kAllAggregations) {
    for (LossKind kind : kAllLosses) {
      for (Similarity sim : {Similarity::cosine, Similarity::dot}) {
        EncoderConfig enc;
        enc.aggregation = agg;
        enc.similarity = sim;
        enc.g = opts.g;
        GradCheckOptions case_opts = opts;
        case_opts.seed = derive_seed(opts.seed, {case_index++});
        report.cases.push_back(check_gradients(enc, gradcheck_loss_config(kind), case_opts));
      }
    }
  }
  return report;
}

}  // namespace simplex
