#include "simplex/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "simplex/rng.hpp"

namespace simplex {

namespace {

std::vector<std::vector<double>> gaussian_rows(std::size_t rows, std::size_t cols,
                                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (auto& r : out) {
    for (auto& v : r) v = normal(rng);
  }
  return out;
}

// Splits a shuffled copy of `items`: the first floor(fraction * n) go to test.
void split_user(const std::vector<std::int64_t>& items, double fraction, std::mt19937_64& rng,
                std::vector<std::int64_t>& train, std::vector<std::int64_t>& test) {
  std::vector<std::int64_t> order = items;
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(fraction * static_cast<double>(order.size()));
  test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
}

}  // namespace

PlantedData generate_planted(const PlantedConfig& cfg) {
  if (cfg.num_users == 0 || cfg.num_items == 0 || cfg.rank == 0) {
    throw ConfigError("planted generator needs users, items and rank > 0");
  }
  if (cfg.min_items_per_user == 0 || cfg.min_items_per_user > cfg.max_items_per_user ||
      cfg.max_items_per_user > cfg.num_items) {
    throw ConfigError("planted generator: bad items-per-user range");
  }
  if (!(cfg.temperature > 0.0) || !(cfg.test_fraction >= 0.0 && cfg.test_fraction < 1.0)) {
    throw ConfigError("planted generator: bad temperature or test fraction");
  }

  std::mt19937_64 rng(derive_seed(cfg.seed, {0}));
  const std::size_t total_users = cfg.num_users + cfg.num_heldout_users;
  auto user_f = gaussian_rows(total_users, cfg.rank, rng);
  auto item_f = gaussian_rows(cfg.num_items, cfg.rank, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> bias(cfg.num_items);
  for (auto& b : bias) b = cfg.popularity_scale * normal(rng);

  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
  std::uniform_int_distribution<std::size_t> count(cfg.min_items_per_user,
                                                   cfg.max_items_per_user);
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);

  PlantedData data;
  std::vector<std::pair<double, std::size_t>> keys(cfg.num_items);
  for (std::size_t u = 0; u < total_users; ++u) {
    std::mt19937_64 urng(derive_seed(cfg.seed, {1, u}));
    const std::size_t n = count(urng);
    // Gumbel top-n samples n items without replacement from the softmax.
    for (std::size_t i = 0; i < cfg.num_items; ++i) {
      double affinity = bias[i];
      for (std::size_t r = 0; r < cfg.rank; ++r) affinity += scale * user_f[u][r] * item_f[i][r];
      keys[i] = {affinity / cfg.temperature + gumbel(urng), i};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end(),
                      [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    std::vector<std::int64_t> items;
    for (std::size_t k = 0; k < n; ++k) items.push_back(static_cast<std::int64_t>(keys[k].second));

    std::vector<std::int64_t> tr;
    std::vector<std::int64_t> te;
    split_user(items, cfg.test_fraction, urng, tr, te);
    if (u < cfg.num_users) {
      data.train.push_back(std::move(tr));
      data.test.push_back(std::move(te));
    } else {
      data.heldout_history.push_back(std::move(tr));
      data.heldout_test.push_back(std::move(te));
    }
  }
  // Every evaluated item needs a trained embedding.
  std::set<std::int64_t> train_items;
  for (const auto& items : data.train) train_items.insert(items.begin(), items.end());
  auto unseen = [&](std::int64_t i) { return !train_items.count(i); };
  for (auto* lists : {&data.test, &data.heldout_history, &data.heldout_test}) {
    for (auto& items : *lists) std::erase_if(items, unseen);
  }
  for (std::size_t u = 0; u < data.heldout_history.size(); ++u) {
    if (data.heldout_history[u].empty()) data.heldout_test[u].clear();
  }
  return data;
}

void write_planted(const PlantedData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& name,
                   const std::vector<std::vector<std::int64_t>>& lists, std::size_t first_user) {
    std::vector<RawRecord> recs;
    for (std::size_t u = 0; u < lists.size(); ++u) {
      if (lists[u].empty()) continue;
      recs.push_back({static_cast<std::int64_t>(first_user + u), lists[u], 0});
    }
    write_interaction_file(dir / name, recs);
  };
  write("train.txt", data.train, 0);
  write("test.txt", data.test, 0);
  if (!data.heldout_history.empty()) {
    write("heldout_history.txt", data.heldout_history, data.train.size());
    write("heldout_test.txt", data.heldout_test, data.train.size());
  }
}

PlantedData implicit_split_from_ratings(const std::filesystem::path& path, double test_fraction,
                                        std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ratings file " + path.string());
  // Raw user id -> items in file order, deduplicated.
  std::map<std::int64_t, std::vector<std::int64_t>> by_user;
  std::map<std::int64_t, std::set<std::int64_t>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::int64_t user = 0;
    std::int64_t item = 0;
    if (!(fields >> user)) continue;
    if (!(fields >> item)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected user and item");
    }
    if (seen[user].insert(item).second) by_user[user].push_back(item);
  }
  if (by_user.empty()) throw DataError("no interactions");

  PlantedData data;
  std::set<std::int64_t> train_items;
  for (auto& [user, items] : by_user) {
    std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(user)}));
    std::vector<std::int64_t> tr;
    std::vector<std::int64_t> te;
    split_user(items, test_fraction, rng, tr, te);
    train_items.insert(tr.begin(), tr.end());
    data.train.push_back(std::move(tr));
    data.test.push_back(std::move(te));
  }
  for (auto& te : data.test) {
    std::erase_if(te, [&](std::int64_t i) { return !train_items.count(i); });
  }
  return data;
}

InteractionDataset to_dataset(const PlantedData& data) {
  std::set<std::int64_t> train_items;
  for (const auto& items : data.train) train_items.insert(items.begin(), items.end());
  auto test = data.test;
  for (auto& te : test) {
    std::erase_if(te, [&](std::int64_t i) { return !train_items.count(i); });
  }
  return make_dataset(data.train, test);
}

}  // namespace simplex
