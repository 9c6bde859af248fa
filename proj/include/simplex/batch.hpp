#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simplex/types.hpp"

namespace simplex {

// One optimizer step worth of (user, positive, negatives, history) tuples.
// Scores for example b are laid out as [positive, neg_0, ..., neg_{N-1}].
struct TrainBatch {
  std::size_t num_negatives = 0;
  std::size_t window = 0;
  std::vector<Index> users;
  std::vector<Index> pos_items;
  std::vector<Index> neg_items;           // size() x num_negatives
  std::vector<Index> history_items;       // size() x window
  std::vector<std::uint8_t> history_mask;  // size() x window

  std::size_t size() const { return users.size(); }
  std::size_t targets_per_example() const { return 1 + num_negatives; }

  Index target(std::size_t b, std::size_t t) const {
    return t == 0 ? pos_items[b] : neg_items[b * num_negatives + (t - 1)];
  }
  std::span<const Index> negatives(std::size_t b) const {
    return {neg_items.data() + b * num_negatives, num_negatives};
  }
  std::span<const Index> history(std::size_t b) const {
    return {history_items.data() + b * window, window};
  }
  std::span<const std::uint8_t> mask(std::size_t b) const {
    return {history_mask.data() + b * window, window};
  }
};

}  // namespace simplex
