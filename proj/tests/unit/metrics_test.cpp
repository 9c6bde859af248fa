#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "simplex/encoder.hpp"
#include "simplex/metrics.hpp"

using namespace simplex;

namespace {

std::vector<Index> ranking_from_scores(const std::vector<float>& scores,
                                       const std::vector<Index>& excluded, std::size_t k) {
  return top_k(scores, excluded, k);
}

// Random instance: float scores with deliberate ties, train and test sets.
struct Instance {
  std::vector<std::vector<float>> scores;
  ItemLists exclude;
  ItemLists relevant;
};

Instance random_instance(std::mt19937_64& rng, std::size_t users, std::size_t items) {
  Instance inst;
  std::uniform_int_distribution<int> level(0, 9);
  for (std::size_t u = 0; u < users; ++u) {
    std::vector<float> s(items);
    for (auto& x : s) x = static_cast<float>(level(rng)) / 10.0f;
    std::vector<Index> ex;
    std::vector<Index> rel;
    for (Index i = 0; i < items; ++i) {
      const auto r = rng() % 10;
      if (r < 2) ex.push_back(i);
      else if (r < 4) rel.push_back(i);
    }
    inst.scores.push_back(s);
    inst.exclude.push_back(ex);
    inst.relevant.push_back(rel);
  }
  return inst;
}

MetricReport report_of(const Instance& inst, std::span<const std::size_t> ks) {
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  ItemLists rankings;
  for (std::size_t u = 0; u < inst.scores.size(); ++u) {
    rankings.push_back(ranking_from_scores(inst.scores[u], inst.exclude[u], kmax));
  }
  return compute_metrics(rankings, inst.relevant, ks);
}

}  // namespace

TEST(TopK, SortsByScore) {
  const std::vector<float> s = {0.9f, 0.1f, 0.5f};
  EXPECT_EQ(top_k(s, {}, 2), (std::vector<Index>{0, 2}));
  const std::vector<Index> ex = {0};
  EXPECT_EQ(top_k(s, ex, 2), (std::vector<Index>{2, 1}));
}

TEST(TopK, TiesGoToSmallerIndex) {
  const std::vector<float> s(6, 0.25f);
  EXPECT_EQ(top_k(s, {}, 4), (std::vector<Index>{0, 1, 2, 3}));
}

TEST(TopK, ShortCatalogReturnsAllCandidates) {
  const std::vector<float> s = {0.2f, 0.3f, 0.1f};
  const std::vector<Index> ex = {1};
  EXPECT_EQ(top_k(s, ex, 10), (std::vector<Index>{0, 2}));
}

TEST(UserMetrics, PerfectRanking) {
  const std::vector<Index> ranking = {4, 2, 7};
  const std::vector<Index> rel = {2, 4, 7};
  auto m = user_metrics(ranking, rel, 3);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.ndcg, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(UserMetrics, NoHits) {
  const std::vector<Index> ranking = {0, 1};
  const std::vector<Index> rel = {5};
  auto m = user_metrics(ranking, rel, 2);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.ndcg, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(UserMetrics, HandEvaluatedNdcg) {
  // Ranking [a, b], relevant {b, c}.
  const std::vector<Index> ranking = {0, 1};
  const std::vector<Index> rel = {1, 2};
  auto m = user_metrics(ranking, rel, 2);
  const double dcg = 1.0 / std::log2(3.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_NEAR(m.ndcg, dcg / (1.0 + dcg), 1e-15);
  EXPECT_NEAR(m.ndcg, 0.3869, 1e-4);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
}

TEST(ComputeMetrics, SkipsUsersWithoutTestItems) {
  const ItemLists rankings = {{0, 1}, {0, 1}};
  const ItemLists relevant = {{0}, {}};
  const std::vector<std::size_t> ks = {1};
  auto r = compute_metrics(rankings, relevant, ks);
  EXPECT_EQ(r.num_eval_users, 1u);
  EXPECT_EQ(r.at(1).recall, 1.0);
  EXPECT_THROW(r.at(5), Error);
}

TEST(ComputeMetrics, EmptyEvaluationSetIsAnError) {
  const ItemLists rankings = {{0}};
  const ItemLists relevant = {{}};
  const std::vector<std::size_t> ks = {1};
  EXPECT_THROW(compute_metrics(rankings, relevant, ks), Error);
}

TEST(ComputeMetrics, MatchesBruteForceOracle) {
  std::mt19937_64 rng(17);
  const std::vector<std::size_t> ks = {1, 5, 20};
  for (int t = 0; t < 50; ++t) {
    auto inst = random_instance(rng, 20, 50);
    auto report = report_of(inst, ks);
    std::vector<std::vector<double>> scores;
    std::vector<std::set<std::size_t>> ex;
    std::vector<std::set<std::size_t>> rel;
    for (std::size_t u = 0; u < 20; ++u) {
      scores.emplace_back(inst.scores[u].begin(), inst.scores[u].end());
      ex.emplace_back(inst.exclude[u].begin(), inst.exclude[u].end());
      rel.emplace_back(inst.relevant[u].begin(), inst.relevant[u].end());
    }
    for (std::size_t k : ks) {
      auto expect = oracle::brute_force(scores, ex, rel, k);
      EXPECT_NEAR(report.at(k).recall, expect.recall, 1e-12);
      EXPECT_NEAR(report.at(k).ndcg, expect.ndcg, 1e-12);
      EXPECT_NEAR(report.at(k).precision, expect.precision, 1e-12);
      EXPECT_NEAR(report.at(k).f1, expect.f1, 1e-12);
    }
  }
}

TEST(ComputeMetrics, MonotoneInKAndPrecisionIdentity) {
  std::mt19937_64 rng(23);
  std::vector<std::size_t> ks(50);
  std::iota(ks.begin(), ks.end(), 1);
  for (int t = 0; t < 20; ++t) {
    auto inst = random_instance(rng, 15, 50);
    auto report = report_of(inst, ks);
    for (std::size_t j = 1; j < ks.size(); ++j) {
      EXPECT_GE(report.values[j].recall, report.values[j - 1].recall);
    }
    for (const auto& v : report.values) {
      for (double x : {v.recall, v.ndcg, v.precision, v.f1}) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0 + 1e-15);
      }
    }
  }
  // precision * K = recall * |test| per user.
  for (int t = 0; t < 200; ++t) {
    auto inst = random_instance(rng, 1, 30);
    if (inst.relevant[0].empty()) continue;
    for (std::size_t k : {1u, 3u, 10u, 25u}) {
      auto ranking = top_k(inst.scores[0], inst.exclude[0], k);
      auto m = user_metrics(ranking, inst.relevant[0], k);
      EXPECT_NEAR(m.precision * static_cast<double>(k),
                  m.recall * static_cast<double>(inst.relevant[0].size()), 1e-12);
    }
  }
}

TEST(ComputeMetrics, NdcgMonotoneWithoutTies) {
  // With a strict ranking each extra position only adds gain while the ideal
  // grows at most as fast once |test| hits are available.
  std::mt19937_64 rng(29);
  for (int t = 0; t < 100; ++t) {
    auto inst = random_instance(rng, 1, 40);
    if (inst.relevant[0].empty()) continue;
    auto ranking = top_k(inst.scores[0], inst.exclude[0], 40);
    const auto n = inst.relevant[0].size();
    for (std::size_t k = n; k + 1 <= ranking.size(); ++k) {
      EXPECT_LE(user_metrics(ranking, inst.relevant[0], k).ndcg,
                user_metrics(ranking, inst.relevant[0], k + 1).ndcg + 1e-15);
    }
  }
}

TEST(ComputeMetrics, InvariantUnderItemRelabeling) {
  std::mt19937_64 rng(31);
  const std::vector<std::size_t> ks = {10};
  for (int t = 0; t < 20; ++t) {
    auto inst = random_instance(rng, 10, 40);
    // Distinct scores so the tie rule cannot depend on labels.
    for (auto& s : inst.scores) {
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += static_cast<float>(i) * 1e-4f;
    }
    std::vector<Index> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Instance moved;
    for (std::size_t u = 0; u < 10; ++u) {
      std::vector<float> s(40);
      for (Index i = 0; i < 40; ++i) s[perm[i]] = inst.scores[u][i];
      std::vector<Index> ex;
      std::vector<Index> rel;
      for (Index i : inst.exclude[u]) ex.push_back(perm[i]);
      for (Index i : inst.relevant[u]) rel.push_back(perm[i]);
      std::sort(ex.begin(), ex.end());
      std::sort(rel.begin(), rel.end());
      moved.scores.push_back(s);
      moved.exclude.push_back(ex);
      moved.relevant.push_back(rel);
    }
    auto a = report_of(inst, ks).at(10);
    auto b = report_of(moved, ks).at(10);
    EXPECT_EQ(a.recall, b.recall);
    EXPECT_EQ(a.ndcg, b.ndcg);
    EXPECT_EQ(a.precision, b.precision);
  }
}

TEST(Evaluate, ThreadCountDoesNotChangeReport) {
  auto params = init_params(40, 60, 8, 3, 0.5);
  std::mt19937_64 rng(37);
  std::vector<std::vector<std::int64_t>> train(40);
  std::vector<std::vector<std::int64_t>> test(40);
  for (std::size_t u = 0; u < 40; ++u) {
    for (int k = 0; k < 8; ++k) train[u].push_back(static_cast<std::int64_t>(rng() % 60));
    test[u].push_back(train[u][0]);
  }
  for (std::int64_t i = 0; i < 60; ++i) train[0].push_back(i);
  auto ds = make_dataset(train, {});
  ItemLists relevant(40);
  for (std::size_t u = 1; u < 40; ++u) {
    for (Index i = 0; i < 60; ++i) {
      if (!ds.is_train_positive(static_cast<Index>(u), i) && rng() % 6 == 0) relevant[u].push_back(i);
    }
  }
  auto ht = build_histories(ds, 5);
  EncoderConfig enc;
  EvalUsers users{ht, ds.train_pos, relevant, true};
  const std::vector<std::size_t> ks = {5, 20};
  auto one = evaluate(params, enc, users, ks, 1);
  for (unsigned threads : {2u, 4u, 7u}) {
    auto many = evaluate(params, enc, users, ks, threads);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      EXPECT_NEAR(one.values[j].recall, many.values[j].recall, 1e-12);
      EXPECT_NEAR(one.values[j].ndcg, many.values[j].ndcg, 1e-12);
    }
  }
  // Train positives never show up in a ranking.
  for (Index u = 1; u < 40; ++u) {
    for (Index i : rank_user(u, params, enc, users, 20)) EXPECT_FALSE(ds.is_train_positive(u, i));
  }
}

TEST(ScoreAllItems, ExcludesPaddingAndMatchesScore) {
  auto params = init_params(2, 5, 3, 8, 0.5);
  EncoderConfig enc;
  const auto h = params.user_emb.row(1);
  auto s = score_all_items(h, params, enc);
  ASSERT_EQ(s.size(), 5u);
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(s[i], score<float>(h, params.item_emb.row(i), enc), 1e-6);
}

TEST(FormatReport, OneLinePerK) {
  MetricReport r;
  r.ks = {20, 50};
  r.values = {{0.5, 0.25, 0.1, 0.2}, {0.75, 0.3, 0.05, 0.1}};
  r.num_eval_users = 3;
  const auto text = format_report(r);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("recall@20=0.5"), std::string::npos);
  EXPECT_NE(text.find("ndcg@50=0.3"), std::string::npos);
}
