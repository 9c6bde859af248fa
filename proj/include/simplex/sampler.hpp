#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "simplex/batch.hpp"
#include "simplex/dataset.hpp"
#include "simplex/rng.hpp"

namespace simplex {

struct SamplerConfig {
  std::size_t num_negatives = 100;
  bool exclude_train_positives = true;
  std::size_t max_rejection_retries = 64;
  std::uint64_t seed = 2021;

  void validate() const;
};

// Draws cfg.num_negatives items uniformly with replacement into `out`.
// With exclusion on, a draw that hits a training positive is redrawn up to
// max_rejection_retries times; the last draw is kept if all retries hit.
// Throws DataError if exclusion is on and the user's positives cover the
// whole catalog.
void sample_negatives(const InteractionDataset& ds, Index user, const SamplerConfig& cfg,
                      SplitMix64& rng, std::span<Index> out);

std::vector<Index> sample_negatives(const InteractionDataset& ds, Index user,
                                    const SamplerConfig& cfg, SplitMix64& rng);

// One epoch of training batches: every training (user, item) pair exactly
// once, in a permutation fixed by (seed, epoch). Batches are built on demand
// and batch(i) is a pure function of (seed, epoch, i).
class EpochBatcher {
 public:
  EpochBatcher(const InteractionDataset& ds, const HistoryTable& histories,
               const SamplerConfig& cfg, std::size_t batch_size, std::uint64_t epoch,
               bool exclude_target_from_history = false);

  std::size_t num_batches() const { return (pairs_.size() + batch_size_ - 1) / batch_size_; }
  std::size_t num_pairs() const { return pairs_.size(); }
  TrainBatch batch(std::size_t index) const;

 private:
  const InteractionDataset& ds_;
  const HistoryTable& histories_;
  SamplerConfig cfg_;
  std::size_t batch_size_;
  std::uint64_t epoch_;
  bool exclude_target_;
  std::vector<std::pair<Index, Index>> pairs_;
};

std::vector<TrainBatch> make_epoch_batches(const InteractionDataset& ds,
                                           const HistoryTable& histories,
                                           const SamplerConfig& cfg, std::size_t batch_size,
                                           std::uint64_t epoch);

}  // namespace simplex
