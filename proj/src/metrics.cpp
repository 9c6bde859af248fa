#include "simplex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "simplex/encoder.hpp"
#include "simplex/parallel.hpp"

namespace simplex {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

const MetricValues& MetricReport::at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return values[i];
  }
  throw Error("metric report has no entry for K=" + std::to_string(k));
}

std::vector<Index> top_k(std::span<const float> scores, std::span<const Index> excluded_sorted,
                         std::size_t k) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto idx = static_cast<Index>(i);
    if (!std::binary_search(excluded_sorted.begin(), excluded_sorted.end(), idx)) {
      candidates.push_back(idx);
    }
  }
  auto better = [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

MetricValues user_metrics(std::span<const Index> ranking, std::span<const Index> relevant_sorted,
                          std::size_t k) {
  MetricValues m;
  if (relevant_sorted.empty() || k == 0) return m;
  const std::size_t depth = std::min(k, ranking.size());
  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(), ranking[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant_sorted.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);

  m.recall = static_cast<double>(hits) / static_cast<double>(relevant_sorted.size());
  m.precision = static_cast<double>(hits) / static_cast<double>(k);
  m.ndcg = dcg / idcg;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
  return m;
}

MetricReport compute_metrics(const ItemLists& rankings, const ItemLists& relevant,
                             std::span<const std::size_t> ks) {
  if (rankings.size() != relevant.size()) throw Error("rankings and relevant sets differ in size");
  MetricReport report;
  report.ks.assign(ks.begin(), ks.end());
  std::vector<CompensatedSum> recall(ks.size()), ndcg(ks.size()), precision(ks.size()),
      f1(ks.size());
  for (std::size_t u = 0; u < relevant.size(); ++u) {
    if (relevant[u].empty()) continue;
    ++report.num_eval_users;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      MetricValues m = user_metrics(rankings[u], relevant[u], ks[i]);
      recall[i].add(m.recall);
      ndcg[i].add(m.ndcg);
      precision[i].add(m.precision);
      f1[i].add(m.f1);
    }
  }
  if (report.num_eval_users == 0) throw Error("no users with relevant items to evaluate");
  const double n = static_cast<double>(report.num_eval_users);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    report.values.push_back({recall[i].value() / n, ndcg[i].value() / n,
                             precision[i].value() / n, f1[i].value() / n});
  }
  return report;
}

std::vector<float> score_all_items(std::span<const float> h, const ModelParams<float>& params,
                                   const EncoderConfig& cfg) {
  std::vector<float> scores(params.num_items());
  const auto eps = static_cast<float>(cfg.cosine_eps);
  const float h_norm = std::max(norm2<float>(h), eps);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto e = params.item_emb.row(i);
    scores[i] = dot<float>(h, e);
    if (cfg.similarity == Similarity::cosine) {
      scores[i] /= h_norm * std::max(norm2<float>(e), eps);
    }
  }
  return scores;
}

namespace {

std::vector<float> representation(Index user, const ModelParams<float>& params,
                                  const EncoderConfig& cfg, const EvalUsers& users) {
  std::span<const float> user_vec;
  if (users.has_user_embedding) {
    user_vec = params.user_emb.row(user);
  } else if (cfg.uses_user_embedding()) {
    throw ConfigError("users without an embedding need g = 0 and no user attention");
  }
  return user_representation<float>(users.histories.items_of(user),
                                    users.histories.mask_of(user), user_vec, params, cfg);
}

}  // namespace

std::vector<Index> rank_user(Index user, const ModelParams<float>& params,
                             const EncoderConfig& cfg, const EvalUsers& users, std::size_t k) {
  auto h = representation(user, params, cfg, users);
  return top_k(score_all_items(h, params, cfg), users.exclude[user], k);
}

MetricReport evaluate(const ModelParams<float>& params, const EncoderConfig& cfg,
                      const EvalUsers& users, std::span<const std::size_t> ks,
                      unsigned threads) {
  if (ks.empty()) throw ConfigError("at least one K is required");
  const std::size_t depth = *std::max_element(ks.begin(), ks.end());
  const std::size_t n = users.relevant.size();
  ItemLists rankings(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      if (users.relevant[u].empty()) continue;
      rankings[u] = rank_user(static_cast<Index>(u), params, cfg, users, depth);
    }
  });
  return compute_metrics(rankings, users.relevant, ks);
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    const auto k = report.ks[i];
    const auto& v = report.values[i];
    out << "recall@" << k << "=" << v.recall << " ndcg@" << k << "=" << v.ndcg << " precision@"
        << k << "=" << v.precision << " f1@" << k << "=" << v.f1 << " users="
        << report.num_eval_users << "\n";
  }
  return out.str();
}

}  // namespace simplex
