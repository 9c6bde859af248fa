#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simplex/types.hpp"

namespace simplex {

// Bidirectional raw-ID <-> contiguous index map. Indices are handed out in
// first-appearance order.
class Vocab {
 public:
  Index intern(std::int64_t raw);
  std::optional<Index> find(std::int64_t raw) const;
  std::int64_t raw(Index index) const { return raw_.at(index); }
  std::size_t size() const { return raw_.size(); }

 private:
  std::unordered_map<std::int64_t, Index> index_;
  std::vector<std::int64_t> raw_;
};

using ItemLists = std::vector<std::vector<Index>>;

struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  // Training positives per user in file order, duplicates removed.
  ItemLists train_seq;
  // Sorted views of the same sets, used for membership tests.
  ItemLists train_pos;
  ItemLists test_pos;
  Vocab user_vocab;
  Vocab item_vocab;

  Index padding_index() const { return static_cast<Index>(num_items); }
  std::size_t num_train_pairs() const;
  bool is_train_positive(Index user, Index item) const;
};

// One parsed line of an interaction file.
struct RawRecord {
  std::int64_t user = 0;
  std::vector<std::int64_t> items;
  std::size_t line = 0;
};

// Parses `user item item ...` lines. `#` lines and blank lines are skipped.
std::vector<RawRecord> read_interaction_file(const std::filesystem::path& path);

void write_interaction_file(const std::filesystem::path& path,
                            const std::vector<RawRecord>& records);

// Test users must appear in the training file and test items must have been
// seen in training. An empty test path yields empty test sets.
InteractionDataset load_interactions(const std::filesystem::path& train_path,
                                     const std::filesystem::path& test_path);

// Builds a dataset directly from per-user item lists (user u has raw id u,
// item i has raw id i). Used by generators and tests.
InteractionDataset make_dataset(const std::vector<std::vector<std::int64_t>>& train,
                                const std::vector<std::vector<std::int64_t>>& test);

// Maps a third split (e.g. validation) onto an existing dataset's vocabularies.
// Same rules as the test file: users and items must already exist.
ItemLists load_split(const std::filesystem::path& path, const InteractionDataset& ds);

// Holds out floor(fraction * n) of each user's training positives (seeded).
// The returned dataset keeps the vocabularies and test split of `ds`.
struct ValidationSplit {
  InteractionDataset train;
  ItemLists valid_pos;
};
ValidationSplit split_validation(const InteractionDataset& ds, double fraction,
                                 std::uint64_t seed);

// Fixed-length interacted-item window per user.
struct HistoryTable {
  std::size_t window = 0;
  std::size_t num_users = 0;
  Index padding = 0;
  std::vector<Index> items;         // num_users x window, row-major
  std::vector<std::uint8_t> mask;   // 1 = real item, 0 = padding

  std::span<const Index> items_of(Index user) const {
    return {items.data() + std::size_t{user} * window, window};
  }
  std::span<const std::uint8_t> mask_of(Index user) const {
    return {mask.data() + std::size_t{user} * window, window};
  }
};

// Keeps the first `window` items of each sequence and right-pads with
// `num_items`. Throws ConfigError for a zero window.
HistoryTable build_histories(const ItemLists& sequences, std::size_t num_items,
                             std::size_t window);
HistoryTable build_histories(const InteractionDataset& ds, std::size_t window);

// Users disjoint from the training users, described only by their history.
// Items must exist in the training item vocabulary.
struct HeldOutUsers {
  Vocab user_vocab;
  ItemLists history;   // file order
  ItemLists test_pos;  // sorted
  ItemLists history_sorted;
};

HeldOutUsers load_heldout_users(const std::filesystem::path& history_path,
                                const std::filesystem::path& test_path,
                                const InteractionDataset& train);

}  // namespace simplex
