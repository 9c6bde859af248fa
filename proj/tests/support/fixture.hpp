#pragma once

// The planted 200 x 200 fixture and the hyperparameters used on it.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "simplex/experiment.hpp"
#include "simplex/synthetic.hpp"

namespace fixture {

inline simplex::PlantedConfig planted(std::uint64_t seed = 11) {
  simplex::PlantedConfig cfg;
  cfg.num_users = 200;
  cfg.num_items = 200;
  cfg.num_heldout_users = 50;
  cfg.seed = seed;
  return cfg;
}

// Validation holdout carved from the training part, as the train command does.
inline simplex::PreparedData prepare(const simplex::PlantedData& data, std::uint64_t seed,
                                     double validation_fraction = 0.1) {
  simplex::PreparedData out;
  out.full = simplex::to_dataset(data);
  auto split = simplex::split_validation(out.full, validation_fraction, seed);
  out.fit = std::move(split.train);
  out.valid_pos = std::move(split.valid_pos);
  out.has_valid = std::any_of(out.valid_pos.begin(), out.valid_pos.end(),
                              [](const auto& l) { return !l.empty(); });
  return out;
}

inline simplex::ExperimentConfig config(simplex::LossKind kind, double g, std::uint64_t seed) {
  simplex::ExperimentConfig cfg;
  cfg.model.dim = 32;
  cfg.model.history_len = 20;
  cfg.model.encoder.g = g;
  cfg.loss.kind = kind;
  cfg.loss.margin = 0.5;
  cfg.loss.negative_weight = 3.0;
  cfg.sampler.num_negatives = 100;
  cfg.sampler.seed = seed;
  cfg.train.learning_rate = 1e-2;
  cfg.train.batch_size = 256;
  cfg.train.max_epochs = 50;
  cfg.train.early_stop_patience = 10;
  cfg.train.eval_ks = {20};
  return cfg;
}

// Users' train and test lists as plain index vectors for the oracles.
inline std::vector<std::vector<std::uint32_t>> lists(const simplex::ItemLists& l) {
  return {l.begin(), l.end()};
}

}  // namespace fixture
