#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "simplex/dataset.hpp"
#include "simplex/loss.hpp"
#include "simplex/metrics.hpp"
#include "simplex/model.hpp"
#include "simplex/sampler.hpp"

namespace simplex {

enum class TrainMode { transductive, strong_generalization };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view text);

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t dim = 64;
  std::size_t history_len = 20;
  // Drop the target positive from its own history window during training.
  bool exclude_target_from_history = false;
  double init_std = 1e-2;

  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double l2_reg = 0.0;
  std::size_t batch_size = 1024;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 10;
  std::size_t eval_every = 1;
  TrainMode mode = TrainMode::transductive;
  std::vector<std::size_t> eval_ks = {20, 50};
  unsigned threads = 1;

  void validate() const;
};

// Adam first/second moments for every tensor.
struct AdamState {
  ModelParams<float> m;
  ModelParams<float> v;
  std::uint64_t step = 0;

  explicit AdamState(const ModelParams<float>& like) : m(zeros_like(like)), v(zeros_like(like)) {}
};

// Bias-corrected Adam. l2_reg * theta is added to the gradients of user_emb
// and item_emb only; the padding row is never touched. Throws NumericError
// (leaving params and state unchanged) when a gradient is not finite.
void adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state,
               const TrainConfig& cfg);

// Metric driving early stopping and snapshot selection.
inline constexpr std::size_t kSelectionK = 20;

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<MetricReport> valid;
  double best_recall = 0.0;  // best validation Recall@20 so far
  std::size_t best_epoch = 0;
};

struct TrainResult {
  ModelParams<float> best;
  ModelParams<float> final;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

// Runs forward -> loss -> backward -> Adam for each epoch. With `valid_pos`
// set, evaluates every eval_every epochs (train positives masked), keeps the
// best Recall@20 snapshot and stops after early_stop_patience evaluations
// without improvement. Without it, the final parameters are also the best.
TrainResult train(const InteractionDataset& ds, const HistoryTable& histories,
                  const ItemLists* valid_pos, const ModelConfig& model, const LossConfig& loss,
                  const SamplerConfig& sampler, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// h_u = V p_u from a history alone, for users never seen in training.
// Requires g = 0 and an aggregation that does not read e_u. An empty
// history gives the zero vector.
std::vector<float> infer_user(std::span<const Index> history, const ModelParams<float>& params,
                              const ModelConfig& model);

// Evaluates held-out users from their histories (strong generalization).
MetricReport evaluate_heldout(const ModelParams<float>& params, const ModelConfig& model,
                              const HeldOutUsers& users, std::span<const std::size_t> ks,
                              unsigned threads = 1);

}  // namespace simplex
