#include "simplex/sampler.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace simplex {

void SamplerConfig::validate() const {
  if (num_negatives < 1) throw ConfigError("sampler.num_negatives must be at least 1");
  if (max_rejection_retries < 1) {
    throw ConfigError("sampler.max_rejection_retries must be at least 1");
  }
}

void sample_negatives(const InteractionDataset& ds, Index user, const SamplerConfig& cfg,
                      SplitMix64& rng, std::span<Index> out) {
  if (ds.num_items == 0) throw DataError("cannot sample negatives from an empty catalog");
  const auto& positives = ds.train_pos[user];
  if (cfg.exclude_train_positives && positives.size() >= ds.num_items) {
    throw DataError("user " + std::to_string(ds.user_vocab.raw(user)) +
                    " has interacted with every item; no negative exists");
  }
  std::uniform_int_distribution<Index> pick(0, static_cast<Index>(ds.num_items - 1));
  for (auto& slot : out) {
    Index item = pick(rng);
    if (cfg.exclude_train_positives) {
      for (std::size_t attempt = 0;
           attempt < cfg.max_rejection_retries &&
           std::binary_search(positives.begin(), positives.end(), item);
           ++attempt) {
        item = pick(rng);
      }
    }
    slot = item;
  }
}

std::vector<Index> sample_negatives(const InteractionDataset& ds, Index user,
                                    const SamplerConfig& cfg, SplitMix64& rng) {
  std::vector<Index> out(cfg.num_negatives);
  sample_negatives(ds, user, cfg, rng, out);
  return out;
}

EpochBatcher::EpochBatcher(const InteractionDataset& ds, const HistoryTable& histories,
                           const SamplerConfig& cfg, std::size_t batch_size,
                           std::uint64_t epoch, bool exclude_target_from_history)
    : ds_(ds),
      histories_(histories),
      cfg_(cfg),
      batch_size_(batch_size),
      epoch_(epoch),
      exclude_target_(exclude_target_from_history) {
  cfg_.validate();
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (histories.num_users != ds.num_users) {
    throw Error("history table does not match dataset");
  }
  pairs_.reserve(ds.num_train_pairs());
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    for (Index i : ds.train_seq[u]) pairs_.emplace_back(static_cast<Index>(u), i);
  }
  if (pairs_.empty()) throw DataError("empty training set");
  std::mt19937_64 rng(derive_seed(cfg_.seed, StreamTag::shuffle, {epoch_}));
  std::shuffle(pairs_.begin(), pairs_.end(), rng);
}

TrainBatch EpochBatcher::batch(std::size_t index) const {
  const std::size_t begin = index * batch_size_;
  const std::size_t end = std::min(pairs_.size(), begin + batch_size_);
  if (begin >= end) throw Error("batch index out of range");

  TrainBatch batch;
  batch.num_negatives = cfg_.num_negatives;
  batch.window = histories_.window;
  const std::size_t n = end - begin;
  batch.users.resize(n);
  batch.pos_items.resize(n);
  batch.neg_items.resize(n * cfg_.num_negatives);
  batch.history_items.resize(n * batch.window);
  batch.history_mask.resize(n * batch.window);

  SplitMix64 rng(derive_seed(cfg_.seed, StreamTag::negatives, {epoch_, index}));
  for (std::size_t b = 0; b < n; ++b) {
    auto [user, item] = pairs_[begin + b];
    batch.users[b] = user;
    batch.pos_items[b] = item;
    sample_negatives(ds_, user, cfg_, rng,
                     {batch.neg_items.data() + b * cfg_.num_negatives, cfg_.num_negatives});
    auto hist = histories_.items_of(user);
    auto mask = histories_.mask_of(user);
    std::copy(hist.begin(), hist.end(), batch.history_items.begin() + b * batch.window);
    for (std::size_t k = 0; k < batch.window; ++k) {
      bool keep = mask[k] && !(exclude_target_ && hist[k] == item);
      batch.history_mask[b * batch.window + k] = keep ? 1 : 0;
    }
  }
  return batch;
}

std::vector<TrainBatch> make_epoch_batches(const InteractionDataset& ds,
                                           const HistoryTable& histories,
                                           const SamplerConfig& cfg, std::size_t batch_size,
                                           std::uint64_t epoch) {
  EpochBatcher batcher(ds, histories, cfg, batch_size, epoch);
  std::vector<TrainBatch> out;
  out.reserve(batcher.num_batches());
  for (std::size_t i = 0; i < batcher.num_batches(); ++i) out.push_back(batcher.batch(i));
  return out;
}

}  // namespace simplex
