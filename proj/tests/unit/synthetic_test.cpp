#include <gtest/gtest.h>

#include <set>

#include "simplex/synthetic.hpp"
#include "temp_dir.hpp"

using namespace simplex;

TEST(Planted, ShapesAndSplit) {
  PlantedConfig cfg;
  cfg.num_users = 40;
  cfg.num_items = 50;
  cfg.num_heldout_users = 10;
  const auto data = generate_planted(cfg);
  ASSERT_EQ(data.train.size(), 40u);
  ASSERT_EQ(data.test.size(), 40u);
  ASSERT_EQ(data.heldout_history.size(), 10u);
  std::set<std::int64_t> train_items;
  for (const auto& l : data.train) train_items.insert(l.begin(), l.end());
  for (std::size_t u = 0; u < 40; ++u) {
    const std::set<std::int64_t> tr(data.train[u].begin(), data.train[u].end());
    const auto total = data.train[u].size() + data.test[u].size();
    EXPECT_LE(total, cfg.max_items_per_user);
    EXPECT_EQ(tr.size(), data.train[u].size());
    for (auto i : data.test[u]) {
      EXPECT_FALSE(tr.count(i));
      EXPECT_TRUE(train_items.count(i));
    }
  }
  for (std::size_t u = 0; u < 10; ++u) {
    for (auto i : data.heldout_history[u]) EXPECT_TRUE(train_items.count(i));
    if (data.heldout_history[u].empty()) EXPECT_TRUE(data.heldout_test[u].empty());
  }
}

TEST(Planted, DeterministicPerSeed) {
  PlantedConfig cfg;
  cfg.num_users = 20;
  cfg.num_items = 30;
  EXPECT_EQ(generate_planted(cfg).train, generate_planted(cfg).train);
  auto other = cfg;
  other.seed = 8;
  EXPECT_NE(generate_planted(cfg).train, generate_planted(other).train);
}

TEST(Planted, WriteThenLoad) {
  PlantedConfig cfg;
  cfg.num_users = 25;
  cfg.num_items = 40;
  cfg.num_heldout_users = 5;
  const auto data = generate_planted(cfg);
  TempDir dir;
  write_planted(data, dir.path());
  auto ds = load_interactions(dir.path() / "train.txt", dir.path() / "test.txt");
  auto direct = to_dataset(data);
  EXPECT_EQ(ds.train_pos, direct.train_pos);
  EXPECT_EQ(ds.test_pos, direct.test_pos);
  auto heldout = load_heldout_users(dir.path() / "heldout_history.txt",
                                    dir.path() / "heldout_test.txt", ds);
  for (std::size_t u = 0; u < heldout.history.size(); ++u) {
    EXPECT_GE(heldout.user_vocab.raw(static_cast<Index>(u)), 25);
  }
}

TEST(Ratings, ImplicitSplitDropsUnseenTestItems) {
  TempDir dir;
  // Item 9 is rated only by user 1, so it can never be a valid test item.
  auto path = dir.write("u.data",
                        "1\t10\t5\t1\n1\t11\t3\t2\n1\t12\t4\t3\n1\t13\t1\t4\n1\t14\t2\t5\n"
                        "2\t10\t5\t1\n2\t11\t3\t2\n2\t12\t4\t3\n2\t13\t1\t4\n2\t9\t2\t5\n");
  const auto data = implicit_split_from_ratings(path, 0.4, 3);
  ASSERT_EQ(data.train.size(), 2u);
  std::set<std::int64_t> seen;
  for (const auto& l : data.train) seen.insert(l.begin(), l.end());
  for (std::size_t u = 0; u < 2; ++u) {
    EXPECT_EQ(data.train[u].size(), 3u);
    EXPECT_LE(data.test[u].size(), 2u);
    for (auto i : data.test[u]) EXPECT_TRUE(seen.count(i));
  }
  EXPECT_THROW(implicit_split_from_ratings(dir.path() / "none", 0.2, 1), DataError);
}
