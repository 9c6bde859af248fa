#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "simplex/dataset.hpp"

namespace simplex {

// Implicit feedback with planted low-rank structure. Each user and item has
// a Gaussian latent factor; a user's items are drawn without replacement
// with probability proportional to exp(affinity / temperature), where the
// affinity is the scaled factor dot product plus an item popularity bias.
struct PlantedConfig {
  std::size_t num_users = 200;
  std::size_t num_items = 200;
  std::size_t rank = 4;
  std::size_t min_items_per_user = 10;
  std::size_t max_items_per_user = 30;
  double temperature = 0.5;
  double popularity_scale = 0.5;  // std of the log-popularity bias
  double test_fraction = 0.2;
  std::size_t num_heldout_users = 0;
  std::uint64_t seed = 7;
};

// Raw-ID lists: user u has raw id u, item i has raw id i. Held-out users get
// raw ids num_users.. and are split into history and test parts.
struct PlantedData {
  std::vector<std::vector<std::int64_t>> train;
  std::vector<std::vector<std::int64_t>> test;
  std::vector<std::vector<std::int64_t>> heldout_history;
  std::vector<std::vector<std::int64_t>> heldout_test;
};

PlantedData generate_planted(const PlantedConfig& cfg);

// Writes train.txt and test.txt (plus heldout_history.txt and
// heldout_test.txt when held-out users exist) into `dir`.
void write_planted(const PlantedData& data, const std::filesystem::path& dir);

// `user item rating timestamp` rows (MovieLens u.data layout) turned into
// implicit feedback: every rating is an interaction, then a seeded per-user
// split sends floor(test_fraction * n) items to test. Test items never seen
// in the train part are dropped.
PlantedData implicit_split_from_ratings(const std::filesystem::path& path, double test_fraction,
                                        std::uint64_t seed);

// Builds an InteractionDataset from PlantedData lists, dropping test items
// unseen in training.
InteractionDataset to_dataset(const PlantedData& data);

}  // namespace simplex
