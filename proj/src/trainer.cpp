#include "simplex/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simplex/encoder.hpp"
#include "simplex/objective.hpp"

namespace simplex {

std::string_view to_string(TrainMode mode) {
  return mode == TrainMode::transductive ? "transductive" : "strong_generalization";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "transductive") return TrainMode::transductive;
  if (text == "strong_generalization") return TrainMode::strong_generalization;
  throw ConfigError("unknown train mode '" + std::string(text) +
                    "' (expected transductive or strong_generalization)");
}

void ModelConfig::validate() const {
  encoder.validate();
  if (dim == 0) throw ConfigError("model.dim must be at least 1");
  if (history_len == 0) throw ConfigError("model.history_len must be at least 1");
  if (!(init_std > 0.0)) throw ConfigError("model.init_std must be positive");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(l2_reg >= 0.0)) throw ConfigError("train.l2_reg must be non-negative");
  if (batch_size == 0) throw ConfigError("train.batch_size must be at least 1");
  if (eval_every == 0) throw ConfigError("train.eval_every must be at least 1");
  if (eval_ks.empty()) throw ConfigError("eval.ks must list at least one K");
  for (auto k : eval_ks) {
    if (k == 0) throw ConfigError("eval.ks entries must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("invalid Adam hyperparameters");
  }
}

void adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state,
               const TrainConfig& cfg) {
  auto p_tensors = params.tensors();
  auto g_tensors = grads.tensors();
  auto m_tensors = state.m.tensors();
  auto v_tensors = state.v.tensors();

  for (std::size_t t = 0; t < g_tensors.size(); ++t) {
    if (g_tensors[t]->size() != p_tensors[t]->size()) {
      throw Error("adam_step: gradient shape mismatch for " + std::string(kTensorNames[t]));
    }
    for (std::size_t k = 0; k < g_tensors[t]->size(); ++k) {
      if (!std::isfinite(g_tensors[t]->data[k])) {
        throw NumericError("non-finite gradient in " + std::string(kTensorNames[t]) + "[" +
                           std::to_string(k) + "]; step aborted");
      }
    }
  }

  ++state.step;
  const double step = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, step);
  const double c2 = 1.0 - std::pow(cfg.beta2, step);

  for (std::size_t t = 0; t < p_tensors.size(); ++t) {
    auto& p = p_tensors[t]->data;
    const auto& g = g_tensors[t]->data;
    auto& m = m_tensors[t]->data;
    auto& v = v_tensors[t]->data;
    const bool embedding = t <= 1;
    // The padding row is the last row of item_emb.
    const std::size_t limit = t == 1 ? p.size() - params.dim : p.size();
    for (std::size_t k = 0; k < limit; ++k) {
      double grad = g[k];
      if (embedding) grad += cfg.l2_reg * p[k];
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad * grad;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = cfg.learning_rate * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps);
      p[k] = static_cast<float>(p[k] - update);
    }
  }
}

namespace {

void check_mode(const ModelConfig& model, const TrainConfig& cfg) {
  if (cfg.mode == TrainMode::strong_generalization) {
    if (model.encoder.g != 0.0) {
      throw ConfigError("strong_generalization mode requires model.g = 0");
    }
    if (model.encoder.aggregation == Aggregation::user_attention) {
      throw ConfigError("strong_generalization mode cannot use user_attention");
    }
  }
}

}  // namespace

TrainResult train(const InteractionDataset& ds, const HistoryTable& histories,
                  const ItemLists* valid_pos, const ModelConfig& model, const LossConfig& loss,
                  const SamplerConfig& sampler, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  model.validate();
  loss.validate();
  sampler.validate();
  cfg.validate();
  check_mode(model, cfg);
  if (histories.num_users != ds.num_users || histories.window != model.history_len) {
    throw ConfigError("history table does not match dataset/model.history_len");
  }

  std::vector<std::size_t> ks = cfg.eval_ks;
  if (std::find(ks.begin(), ks.end(), kSelectionK) == ks.end()) ks.push_back(kSelectionK);

  TrainResult result;
  result.final = init_params(ds.num_users, ds.num_items, model.dim, sampler.seed, model.init_std);
  result.best = result.final;
  if (cfg.max_epochs == 0) return result;

  AdamState adam(result.final);
  ModelParams<float> grads = zeros_like(result.final);
  EvalUsers eval_users{histories, ds.train_pos, valid_pos ? *valid_pos : ds.test_pos, true};

  double best_recall = -1.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochBatcher batcher(ds, histories, sampler, cfg.batch_size, epoch,
                         model.exclude_target_from_history);
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < batcher.num_batches(); ++i) {
      TrainBatch batch = batcher.batch(i);
      auto tape = forward(batch, result.final, model.encoder, cfg.threads);
      BatchObjective<float> obj;
      try {
        obj = batch_objective(tape, loss);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(i) +
                           ": " + e.what());
      }
      grads.set_zero();
      backward<float>(batch, tape, obj.dscores, result.final, model.encoder, grads);
      try {
        adam_step(result.final, grads, adam, cfg);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(i) +
                           ": " + e.what());
      }
      loss_sum += obj.mean_loss * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(batcher.num_pairs());
    bool stop = false;
    if (valid_pos && epoch % cfg.eval_every == 0) {
      rec.valid = evaluate(result.final, model.encoder, eval_users, ks, cfg.threads);
      const double recall = rec.valid->at(kSelectionK).recall;
      if (recall > best_recall) {
        best_recall = recall;
        result.best = result.final;
        result.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= cfg.early_stop_patience) {
        stop = true;
      }
    } else if (!valid_pos) {
      result.best_epoch = epoch;
    }
    rec.best_recall = std::max(best_recall, 0.0);
    rec.best_epoch = result.best_epoch;
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stop) {
      result.stopped_early = true;
      break;
    }
  }
  if (!valid_pos) result.best = result.final;
  return result;
}

std::vector<float> infer_user(std::span<const Index> history, const ModelParams<float>& params,
                              const ModelConfig& model) {
  if (model.encoder.g != 0.0 || model.encoder.aggregation == Aggregation::user_attention) {
    throw ConfigError("inference from history alone requires g = 0 without user attention");
  }
  ItemLists seq{std::vector<Index>(history.begin(), history.end())};
  HistoryTable ht = build_histories(seq, params.num_items(), model.history_len);
  return user_representation<float>(ht.items_of(0), ht.mask_of(0), {}, params, model.encoder);
}

MetricReport evaluate_heldout(const ModelParams<float>& params, const ModelConfig& model,
                              const HeldOutUsers& users, std::span<const std::size_t> ks,
                              unsigned threads) {
  HistoryTable ht = build_histories(users.history, params.num_items(), model.history_len);
  EvalUsers eval{ht, users.history_sorted, users.test_pos, false};
  return evaluate(params, model.encoder, eval, ks, threads);
}

}  // namespace simplex
