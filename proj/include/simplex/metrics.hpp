#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "simplex/dataset.hpp"
#include "simplex/model.hpp"

namespace simplex {

struct MetricValues {
  double recall = 0.0;
  double ndcg = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<MetricValues> values;  // parallel to ks
  std::size_t num_eval_users = 0;

  // Throws Error if k was not evaluated.
  const MetricValues& at(std::size_t k) const;
};

// Top-k item indices by descending score; ties go to the smaller index.
// Items in `excluded_sorted` are never returned.
std::vector<Index> top_k(std::span<const float> scores, std::span<const Index> excluded_sorted,
                         std::size_t k);

// Metrics of one ranking against a sorted relevant set. Positions past the
// end of a short ranking count as misses.
MetricValues user_metrics(std::span<const Index> ranking, std::span<const Index> relevant_sorted,
                          std::size_t k);

// Averages over users with a nonempty relevant set. rankings[u] must hold at
// least max(ks) items when that many candidates exist. Throws Error when no
// user has relevant items.
MetricReport compute_metrics(const ItemLists& rankings, const ItemLists& relevant,
                             std::span<const std::size_t> ks);

// Cosine or dot score of `h` against every real item (padding excluded).
std::vector<float> score_all_items(std::span<const float> h, const ModelParams<float>& params,
                                   const EncoderConfig& cfg);

// What evaluation needs about each ranked user.
struct EvalUsers {
  const HistoryTable& histories;
  const ItemLists& exclude;   // sorted; masked out of the ranking
  const ItemLists& relevant;  // sorted; ground truth
  // False for held-out users that have no row in user_emb (requires g = 0
  // and no user attention).
  bool has_user_embedding = true;
};

std::vector<Index> rank_user(Index user, const ModelParams<float>& params,
                             const EncoderConfig& cfg, const EvalUsers& users, std::size_t k);

MetricReport evaluate(const ModelParams<float>& params, const EncoderConfig& cfg,
                      const EvalUsers& users, std::span<const std::size_t> ks,
                      unsigned threads = 1);

// "recall@20=0.1234 ndcg@20=..." one line per K.
std::string format_report(const MetricReport& report);

}  // namespace simplex
