#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "simplex/encoder.hpp"

using namespace simplex;

namespace {

EncoderConfig enc(Aggregation a, double g, Similarity s = Similarity::cosine) {
  EncoderConfig cfg;
  cfg.aggregation = a;
  cfg.g = g;
  cfg.similarity = s;
  return cfg;
}

ModelParams<double> random_params(std::size_t users, std::size_t items, std::size_t d,
                                  std::uint64_t seed) {
  ModelParams<double> p(users, items, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (auto* t : p.tensors()) {
    for (auto& x : t->data) x = gauss(rng);
  }
  std::fill(p.item_emb.row(items).begin(), p.item_emb.row(items).end(), 0.0);
  return p;
}

// Three examples over 6 items, window 3; the second and third rows are padded.
TrainBatch small_batch(Index pad) {
  TrainBatch b;
  b.num_negatives = 2;
  b.window = 3;
  b.users = {0, 1, 2};
  b.pos_items = {0, 2, 4};
  b.neg_items = {1, 3, 5, 1, 0, 3};
  b.history_items = {0, 1, 2, 2, 3, pad, 4, pad, pad};
  b.history_mask = {1, 1, 1, 1, 1, 0, 1, 0, 0};
  return b;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Score, CosineHandValues) {
  const auto cfg = enc(Aggregation::average_pooling, 0.5);
  const std::vector<double> a = {3.0, 4.0};
  const std::vector<double> b = {4.0, 3.0};
  EXPECT_NEAR(score<double>(a, b, cfg), 24.0 / 25.0, 1e-15);
  EXPECT_NEAR(score<double>(a, a, cfg), 1.0, 1e-15);
  EXPECT_EQ(score<double>(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 2.0}, cfg), 0.0);
  EXPECT_EQ(score<double>(std::vector<double>{0.0, 0.0}, b, cfg), 0.0);
}

TEST(Score, DotProduct) {
  const auto cfg = enc(Aggregation::average_pooling, 1.0, Similarity::dot);
  EXPECT_DOUBLE_EQ(score<double>(std::vector<double>{3.0, 4.0}, std::vector<double>{4.0, 3.0}, cfg),
                   24.0);
}

TEST(Score, CosineIsScaleInvariant) {
  const auto cfg = enc(Aggregation::average_pooling, 0.5);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> h(8);
    std::vector<double> e(8);
    for (auto& x : h) x = gauss(rng);
    for (auto& x : e) x = gauss(rng);
    const double c = scale(rng);
    std::vector<double> ch = h;
    for (auto& x : ch) x *= c;
    EXPECT_NEAR(score<double>(ch, e, cfg), score<double>(h, e, cfg), 1e-9);
  }
}

TEST(Fuse, LinearCombination) {
  ModelParams<double> p(1, 1, 2);
  p.V(0, 0) = 1.0;
  p.V(1, 1) = 1.0;
  const std::vector<double> eu = {2.0, 0.0};
  const std::vector<double> pu = {0.0, 2.0};
  EXPECT_EQ(fuse<double>(eu, pu, p, enc(Aggregation::average_pooling, 0.5)),
            (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(fuse<double>(eu, pu, p, enc(Aggregation::average_pooling, 1.0)), eu);
  p.V(0, 1) = 3.0;
  EXPECT_EQ(fuse<double>(eu, pu, p, enc(Aggregation::average_pooling, 0.0)),
            (std::vector<double>{6.0, 2.0}));
}

TEST(Aggregate, AveragePoolingMean) {
  ModelParams<double> p(1, 2, 2);
  p.item_emb(0, 0) = 1.0;
  p.item_emb(1, 1) = 1.0;
  const std::vector<Index> items = {0, 1, 2};
  const std::vector<std::uint8_t> mask = {1, 1, 0};
  auto agg = aggregate<double>(items, mask, p, enc(Aggregation::average_pooling, 0.5), {});
  EXPECT_EQ(agg.pooled, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(agg.active, 2u);
}

TEST(Aggregate, SingletonGivesThatEmbeddingInEveryMode) {
  auto p = random_params(2, 5, 4, 3);
  const std::vector<Index> items = {3, 5, 5};
  const std::vector<std::uint8_t> mask = {1, 0, 0};
  for (auto a : kAllAggregations) {
    auto agg = aggregate<double>(items, mask, p, enc(a, 0.5), p.user_emb.row(0));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(agg.pooled[c], p.item_emb(3, c), 1e-15);
  }
}

TEST(Aggregate, AllMaskedGivesZero) {
  auto p = random_params(1, 4, 3, 4);
  const std::vector<Index> items = {4, 4};
  const std::vector<std::uint8_t> mask = {0, 0};
  for (auto a : kAllAggregations) {
    auto agg = aggregate<double>(items, mask, p, enc(a, 0.5), p.user_emb.row(0));
    EXPECT_EQ(agg.pooled, (std::vector<double>{0.0, 0.0, 0.0}));
    EXPECT_EQ(agg.active, 0u);
  }
}

TEST(Aggregate, AttentionWeightsArePositiveAndSumToOne) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    auto p = random_params(2, 10, 6, rng());
    std::vector<Index> items(7);
    std::vector<std::uint8_t> mask(7);
    for (std::size_t k = 0; k < 7; ++k) {
      mask[k] = k == 0 || rng() % 3 != 0;
      items[k] = mask[k] ? static_cast<Index>(rng() % 10) : 10;
    }
    for (auto a : {Aggregation::self_attention, Aggregation::user_attention}) {
      auto agg = aggregate<double>(items, mask, p, enc(a, 0.5), p.user_emb.row(1));
      double total = 0.0;
      for (std::size_t k = 0; k < 7; ++k) {
        if (mask[k]) {
          EXPECT_GT(agg.weights[k], 0.0);
        } else {
          EXPECT_EQ(agg.weights[k], 0.0);
        }
        total += agg.weights[k];
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Aggregate, SelfAttentionWithZeroQueryIsAveragePooling) {
  auto p = random_params(1, 8, 5, 12);
  std::fill(p.q.data.begin(), p.q.data.end(), 0.0);
  const std::vector<Index> items = {1, 6, 2, 8};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0};
  auto attn = aggregate<double>(items, mask, p, enc(Aggregation::self_attention, 0.5), {});
  // Mean computed directly from the three unmasked rows.
  for (std::size_t c = 0; c < 5; ++c) {
    const double mean = (p.item_emb(1, c) + p.item_emb(6, c) + p.item_emb(2, c)) / 3.0;
    EXPECT_NEAR(attn.pooled[c], mean, 1e-12);
  }
}

TEST(Forward, MatchesStandaloneMatrixFactorizationWhenGIsOne) {
  auto p = random_params(3, 6, 4, 21);
  auto batch = small_batch(6);
  for (auto s : {Similarity::cosine, Similarity::dot}) {
    for (auto a : kAllAggregations) {
      auto tape = forward(batch, p, enc(a, 1.0, s));
      for (std::size_t b = 0; b < batch.size(); ++b) {
        for (std::size_t t = 0; t < 3; ++t) {
          const auto u = p.user_emb.row(batch.users[b]);
          const auto e = p.item_emb.row(batch.target(b, t));
          double d = 0.0, nu = 0.0, ne = 0.0;
          for (std::size_t c = 0; c < 4; ++c) {
            d += u[c] * e[c];
            nu += u[c] * u[c];
            ne += e[c] * e[c];
          }
          const double expect = s == Similarity::dot ? d : d / (std::sqrt(nu) * std::sqrt(ne));
          EXPECT_NEAR(tape.scores_of(b)[t], expect, 1e-12);
        }
      }
    }
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  auto p = random_params(3, 6, 4, 2);
  auto batch = small_batch(6);
  for (auto a : kAllAggregations) {
    const auto cfg = enc(a, 0.5);
    auto tape = forward(batch, p, cfg);
    std::vector<double> dscores(tape.scores.size(), 0.0);
    auto grads = zeros_like(p);
    backward<double>(batch, tape, dscores, p, cfg, grads);
    for (double x : flatten(grads)) EXPECT_EQ(x, 0.0);
  }
}

TEST(Backward, BilinearGradientForDotMatrixFactorization) {
  auto p = random_params(3, 6, 4, 6);
  TrainBatch b;
  b.num_negatives = 0;
  b.window = 1;
  b.users = {1};
  b.pos_items = {4};
  b.history_items = {6};
  b.history_mask = {0};
  const auto cfg = enc(Aggregation::average_pooling, 1.0, Similarity::dot);
  auto tape = forward(b, p, cfg);
  const std::vector<double> up = {0.7};
  auto grads = zeros_like(p);
  backward<double>(b, tape, up, p, cfg, grads);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(grads.user_emb(1, c), 0.7 * p.item_emb(4, c), 1e-15);
    EXPECT_NEAR(grads.item_emb(4, c), 0.7 * p.user_emb(1, c), 1e-15);
  }
}

TEST(Backward, PaddingRowNeverReceivesGradient) {
  auto p = random_params(3, 6, 4, 14);
  auto batch = small_batch(6);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  for (auto a : kAllAggregations) {
    const auto cfg = enc(a, 0.3);
    auto tape = forward(batch, p, cfg);
    std::vector<double> up(tape.scores.size());
    for (auto& x : up) x = gauss(rng);
    auto grads = zeros_like(p);
    backward<double>(batch, tape, up, p, cfg, grads);
    for (double x : grads.item_emb.row(6)) EXPECT_EQ(x, 0.0);
  }
}

TEST(Backward, MaskedSlotsAreInert) {
  auto p = random_params(3, 6, 4, 30);
  auto batch = small_batch(6);
  // Same batch with the masked slots pointing at real items instead of padding.
  auto other = batch;
  other.history_items[5] = 1;
  other.history_items[7] = 3;
  other.history_items[8] = 0;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss;
  for (auto a : kAllAggregations) {
    const auto cfg = enc(a, 0.4);
    auto t1 = forward(batch, p, cfg);
    auto t2 = forward(other, p, cfg);
    EXPECT_EQ(t1.scores, t2.scores);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      EXPECT_EQ(t1.examples[b].agg.pooled, t2.examples[b].agg.pooled);
    }
    std::vector<double> up(t1.scores.size());
    for (auto& x : up) x = gauss(rng);
    auto g1 = zeros_like(p);
    auto g2 = zeros_like(p);
    backward<double>(batch, t1, up, p, cfg, g1);
    backward<double>(other, t2, up, p, cfg, g2);
    EXPECT_EQ(flatten(g1), flatten(g2));
  }
}

TEST(Backward, MaskedEmbeddingPerturbationDoesNotChangeAnything) {
  auto p = random_params(3, 8, 4, 31);
  auto batch = small_batch(8);
  // Items 6 and 7 sit only in masked slots.
  batch.history_items[5] = 6;
  batch.history_items[7] = 7;
  auto q = p;
  for (std::size_t c = 0; c < 4; ++c) {
    q.item_emb(6, c) += 3.0;
    q.item_emb(7, c) -= 2.0;
  }
  std::vector<double> up(batch.size() * 3, 0.25);
  for (auto a : kAllAggregations) {
    const auto cfg = enc(a, 0.5);
    auto t1 = forward(batch, p, cfg);
    auto t2 = forward(batch, q, cfg);
    EXPECT_EQ(t1.scores, t2.scores);
    auto g1 = zeros_like(p);
    auto g2 = zeros_like(p);
    backward<double>(batch, t1, up, p, cfg, g1);
    backward<double>(batch, t2, up, q, cfg, g2);
    EXPECT_EQ(flatten(g1), flatten(g2));
  }
}

TEST(Backward, MismatchedTapeIsRejected) {
  auto p = random_params(3, 6, 4, 2);
  auto batch = small_batch(6);
  const auto cfg = enc(Aggregation::average_pooling, 0.5);
  auto tape = forward(batch, p, cfg);
  auto shorter = batch;
  shorter.users.pop_back();
  shorter.pos_items.pop_back();
  std::vector<double> up(tape.scores.size(), 1.0);
  auto grads = zeros_like(p);
  EXPECT_THROW(backward<double>(shorter, tape, up, p, cfg, grads), Error);
}

TEST(UserRepresentation, MatchesFuseOfAggregate) {
  auto p = random_params(2, 5, 3, 17);
  const std::vector<Index> items = {4, 0, 5};
  const std::vector<std::uint8_t> mask = {1, 1, 0};
  for (auto a : kAllAggregations) {
    const auto cfg = enc(a, 0.25);
    auto agg = aggregate<double>(items, mask, p, cfg, p.user_emb.row(1));
    auto expect = fuse<double>(p.user_emb.row(1), agg.pooled, p, cfg);
    EXPECT_EQ(user_representation<double>(items, mask, p.user_emb.row(1), p, cfg), expect);
  }
}

TEST(EncoderConfig, Validation) {
  EXPECT_THROW(enc(Aggregation::average_pooling, 1.5).validate(), ConfigError);
  EXPECT_THROW(enc(Aggregation::average_pooling, -0.1).validate(), ConfigError);
  auto cfg = enc(Aggregation::average_pooling, 0.5);
  cfg.cosine_eps = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  for (auto a : kAllAggregations) EXPECT_EQ(parse_aggregation(to_string(a)), a);
  EXPECT_THROW(parse_aggregation("max_pooling"), ConfigError);
}

TEST(InitParams, IdentityProjectionAndZeroPadding) {
  auto p = init_params(5, 7, 4, 99);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(p.V(r, c), r == c ? 1.0f : 0.0f);
  }
  for (float x : p.item_emb.row(7)) EXPECT_EQ(x, 0.0f);
  for (float x : p.q.data) EXPECT_EQ(x, 0.0f);
  EXPECT_EQ(p, init_params(5, 7, 4, 99));
  EXPECT_NE(p, init_params(5, 7, 4, 100));
}
