#pragma once

// Reference implementations that share no code with the library. They work
// on plain vectors so a bug in the library cannot leak into its own check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

struct Metrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// Straight-line evaluation: full sort of every non-excluded item by
// (score desc, index asc), then per-user metrics averaged over users with a
// nonempty relevant set.
inline Metrics brute_force(const std::vector<std::vector<double>>& scores,
                           const std::vector<std::set<std::size_t>>& exclude,
                           const std::vector<std::set<std::size_t>>& relevant, std::size_t k) {
  Metrics sum;
  std::size_t users = 0;
  for (std::size_t u = 0; u < scores.size(); ++u) {
    if (relevant[u].empty()) continue;
    ++users;
    std::vector<std::size_t> items;
    for (std::size_t i = 0; i < scores[u].size(); ++i) {
      if (!exclude[u].count(i)) items.push_back(i);
    }
    std::sort(items.begin(), items.end(), [&](std::size_t a, std::size_t b) {
      if (scores[u][a] != scores[u][b]) return scores[u][a] > scores[u][b];
      return a < b;
    });
    double hits = 0.0;
    double dcg = 0.0;
    for (std::size_t r = 0; r < k && r < items.size(); ++r) {
      if (relevant[u].count(items[r])) {
        hits += 1.0;
        dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      }
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, relevant[u].size()); ++r) {
      idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    const double recall = hits / static_cast<double>(relevant[u].size());
    const double precision = hits / static_cast<double>(k);
    sum.recall += recall;
    sum.precision += precision;
    sum.ndcg += dcg / idcg;
    sum.f1 += recall + precision > 0.0 ? 2.0 * recall * precision / (recall + precision) : 0.0;
  }
  if (users == 0) return sum;
  const double n = static_cast<double>(users);
  return {sum.recall / n, sum.ndcg / n, sum.precision / n, sum.f1 / n};
}

// Non-personalized popularity ranking: items ordered by training count
// (ties by index), each user's own training items skipped. Returns the mean
// Recall@k over users with test items.
inline double itempop_recall(const std::vector<std::vector<std::uint32_t>>& train,
                             const std::vector<std::vector<std::uint32_t>>& test,
                             std::size_t num_items, std::size_t k) {
  std::vector<double> pop(num_items, 0.0);
  for (const auto& items : train) {
    for (auto i : items) pop[i] += 1.0;
  }
  std::vector<std::vector<double>> scores(train.size(), pop);
  std::vector<std::set<std::size_t>> exclude(train.size());
  std::vector<std::set<std::size_t>> relevant(train.size());
  for (std::size_t u = 0; u < train.size(); ++u) {
    exclude[u].insert(train[u].begin(), train[u].end());
    if (u < test.size()) relevant[u].insert(test[u].begin(), test[u].end());
  }
  return brute_force(scores, exclude, relevant, k).recall;
}

// Popularity ranking for users absent from training: counts still come from
// the training users; each held-out user's own history is skipped.
inline double itempop_recall_heldout(const std::vector<std::vector<std::uint32_t>>& train,
                                     const std::vector<std::vector<std::uint32_t>>& history,
                                     const std::vector<std::vector<std::uint32_t>>& test,
                                     std::size_t num_items, std::size_t k) {
  std::vector<double> pop(num_items, 0.0);
  for (const auto& items : train) {
    for (auto i : items) pop[i] += 1.0;
  }
  std::vector<std::vector<double>> scores(history.size(), pop);
  std::vector<std::set<std::size_t>> exclude(history.size());
  std::vector<std::set<std::size_t>> relevant(history.size());
  for (std::size_t u = 0; u < history.size(); ++u) {
    exclude[u].insert(history[u].begin(), history[u].end());
    relevant[u].insert(test[u].begin(), test[u].end());
  }
  return brute_force(scores, exclude, relevant, k).recall;
}

}  // namespace oracle
