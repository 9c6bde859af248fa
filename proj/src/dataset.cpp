#include "simplex/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "simplex/rng.hpp"

namespace simplex {

Index Vocab::intern(std::int64_t raw) {
  auto [it, inserted] = index_.try_emplace(raw, static_cast<Index>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

std::optional<Index> Vocab::find(std::int64_t raw) const {
  auto it = index_.find(raw);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t InteractionDataset::num_train_pairs() const {
  std::size_t n = 0;
  for (const auto& items : train_pos) n += items.size();
  return n;
}

bool InteractionDataset::is_train_positive(Index user, Index item) const {
  const auto& items = train_pos[user];
  return std::binary_search(items.begin(), items.end(), item);
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

std::int64_t parse_id(std::string_view token, const std::filesystem::path& path,
                      std::size_t line) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": malformed id '" << token << "'";
    throw DataError(msg.str());
  }
  return value;
}

// Deduplicates while keeping first-occurrence order.
std::vector<Index> unique_in_order(const std::vector<Index>& items) {
  std::vector<Index> out;
  std::vector<Index> seen;
  out.reserve(items.size());
  for (Index i : items) {
    auto it = std::lower_bound(seen.begin(), seen.end(), i);
    if (it != seen.end() && *it == i) continue;
    seen.insert(it, i);
    out.push_back(i);
  }
  return out;
}

std::vector<Index> sorted_copy(std::vector<Index> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

ItemLists map_split(const std::vector<RawRecord>& records, const InteractionDataset& ds,
                    const std::filesystem::path& path) {
  ItemLists out(ds.num_users);
  for (const auto& rec : records) {
    auto user = ds.user_vocab.find(rec.user);
    if (!user) {
      throw DataError(path.string() + ":" + std::to_string(rec.line) + ": user " +
                      std::to_string(rec.user) + " does not appear in the training file");
    }
    for (std::int64_t raw : rec.items) {
      auto item = ds.item_vocab.find(raw);
      if (!item) {
        throw DataError(path.string() + ":" + std::to_string(rec.line) + ": item " +
                        std::to_string(raw) +
                        " is unseen in training (no embedding would exist)");
      }
      out[*user].push_back(*item);
    }
  }
  for (auto& items : out) items = sorted_copy(std::move(items));
  return out;
}

InteractionDataset from_records(const std::vector<RawRecord>& train,
                                const std::vector<RawRecord>& test,
                                const std::filesystem::path& test_path) {
  InteractionDataset ds;
  std::vector<std::vector<Index>> raw_seq;
  for (const auto& rec : train) {
    Index u = ds.user_vocab.intern(rec.user);
    if (u >= raw_seq.size()) raw_seq.resize(u + 1);
    for (std::int64_t raw : rec.items) raw_seq[u].push_back(ds.item_vocab.intern(raw));
  }
  ds.num_users = ds.user_vocab.size();
  ds.num_items = ds.item_vocab.size();
  ds.train_seq.resize(ds.num_users);
  ds.train_pos.resize(ds.num_users);
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    ds.train_seq[u] = unique_in_order(raw_seq[u]);
    ds.train_pos[u] = sorted_copy(ds.train_seq[u]);
  }
  if (ds.num_train_pairs() == 0) throw DataError("no interactions");
  ds.test_pos = map_split(test, ds, test_path);
  return ds;
}

}  // namespace

std::vector<RawRecord> read_interaction_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read interaction file " + path.string());

  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      while (pos < rest.size() && is_space(rest[pos])) ++pos;
      std::size_t start = pos;
      while (pos < rest.size() && !is_space(rest[pos])) ++pos;
      if (pos > start) tokens.push_back(rest.substr(start, pos - start));
    }
    if (tokens.empty() || tokens.front().front() == '#') continue;

    RawRecord rec;
    rec.line = line_no;
    rec.user = parse_id(tokens.front(), path, line_no);
    rec.items.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      rec.items.push_back(parse_id(tokens[t], path, line_no));
    }
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw DataError("error while reading " + path.string());
  return records;
}

void write_interaction_file(const std::filesystem::path& path,
                            const std::vector<RawRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write interaction file " + path.string());
  for (const auto& rec : records) {
    out << rec.user;
    for (std::int64_t item : rec.items) out << ' ' << item;
    out << '\n';
  }
}

InteractionDataset load_interactions(const std::filesystem::path& train_path,
                                     const std::filesystem::path& test_path) {
  auto train = read_interaction_file(train_path);
  std::vector<RawRecord> test;
  if (!test_path.empty()) test = read_interaction_file(test_path);
  return from_records(train, test, test_path);
}

InteractionDataset make_dataset(const std::vector<std::vector<std::int64_t>>& train,
                                const std::vector<std::vector<std::int64_t>>& test) {
  std::vector<RawRecord> train_rec;
  std::vector<RawRecord> test_rec;
  for (std::size_t u = 0; u < train.size(); ++u) {
    train_rec.push_back({static_cast<std::int64_t>(u), train[u], u + 1});
  }
  for (std::size_t u = 0; u < test.size(); ++u) {
    if (test[u].empty()) continue;
    test_rec.push_back({static_cast<std::int64_t>(u), test[u], u + 1});
  }
  return from_records(train_rec, test_rec, "<test>");
}

ItemLists load_split(const std::filesystem::path& path, const InteractionDataset& ds) {
  return map_split(read_interaction_file(path), ds, path);
}

ValidationSplit split_validation(const InteractionDataset& ds, double fraction,
                                 std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  ValidationSplit split{ds, ItemLists(ds.num_users)};
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    const auto& seq = ds.train_seq[u];
    auto n_hold = static_cast<std::size_t>(fraction * static_cast<double>(seq.size()));
    if (n_hold == 0) continue;

    std::vector<std::size_t> order(seq.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::mt19937_64 rng(derive_seed(seed, StreamTag::validation, {u}));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::uint8_t> held(seq.size(), 0);
    for (std::size_t k = 0; k < n_hold; ++k) held[order[k]] = 1;

    std::vector<Index> kept;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (held[k]) {
        split.valid_pos[u].push_back(seq[k]);
      } else {
        kept.push_back(seq[k]);
      }
    }
    split.train.train_seq[u] = kept;
    split.train.train_pos[u] = sorted_copy(kept);
    split.valid_pos[u] = sorted_copy(split.valid_pos[u]);
  }
  return split;
}

HistoryTable build_histories(const ItemLists& sequences, std::size_t num_items,
                             std::size_t window) {
  if (window == 0) throw ConfigError("history window K must be at least 1");
  HistoryTable ht;
  ht.window = window;
  ht.num_users = sequences.size();
  ht.padding = static_cast<Index>(num_items);
  ht.items.assign(ht.num_users * window, ht.padding);
  ht.mask.assign(ht.num_users * window, 0);
  for (std::size_t u = 0; u < sequences.size(); ++u) {
    std::size_t n = std::min(window, sequences[u].size());
    for (std::size_t k = 0; k < n; ++k) {
      ht.items[u * window + k] = sequences[u][k];
      ht.mask[u * window + k] = 1;
    }
  }
  return ht;
}

HistoryTable build_histories(const InteractionDataset& ds, std::size_t window) {
  return build_histories(ds.train_seq, ds.num_items, window);
}

HeldOutUsers load_heldout_users(const std::filesystem::path& history_path,
                                const std::filesystem::path& test_path,
                                const InteractionDataset& train) {
  HeldOutUsers out;
  auto lookup_item = [&](std::int64_t raw, const std::filesystem::path& path,
                         std::size_t line) {
    auto item = train.item_vocab.find(raw);
    if (!item) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": item " +
                      std::to_string(raw) + " is unseen in training");
    }
    return *item;
  };

  std::vector<std::vector<Index>> raw_hist;
  for (const auto& rec : read_interaction_file(history_path)) {
    if (train.user_vocab.find(rec.user)) {
      throw DataError(history_path.string() + ":" + std::to_string(rec.line) + ": user " +
                      std::to_string(rec.user) +
                      " also appears in training; held-out users must be disjoint");
    }
    Index u = out.user_vocab.intern(rec.user);
    if (u >= raw_hist.size()) raw_hist.resize(u + 1);
    for (std::int64_t raw : rec.items) {
      raw_hist[u].push_back(lookup_item(raw, history_path, rec.line));
    }
  }
  out.history.resize(out.user_vocab.size());
  out.history_sorted.resize(out.user_vocab.size());
  for (std::size_t u = 0; u < out.history.size(); ++u) {
    out.history[u] = unique_in_order(raw_hist[u]);
    out.history_sorted[u] = sorted_copy(out.history[u]);
  }

  out.test_pos.resize(out.user_vocab.size());
  for (const auto& rec : read_interaction_file(test_path)) {
    auto u = out.user_vocab.find(rec.user);
    if (!u) {
      throw DataError(test_path.string() + ":" + std::to_string(rec.line) + ": user " +
                      std::to_string(rec.user) + " has no history line");
    }
    for (std::int64_t raw : rec.items) {
      out.test_pos[*u].push_back(lookup_item(raw, test_path, rec.line));
    }
  }
  for (auto& items : out.test_pos) items = sorted_copy(std::move(items));
  return out;
}

}  // namespace simplex
