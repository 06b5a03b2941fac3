#include <gtest/gtest.h>

#include <random>

#include "grw/rouge.hpp"
#include "oracles.hpp"

using namespace grw;
using W = std::vector<std::string>;

TEST(Rouge, UnigramExample) {
  const auto s = rouge_n(W{"the", "cat", "sat"}, W{"the", "cat", "ran"}, 1);
  EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
}

TEST(Rouge, IdentityAndDisjoint) {
  const W x = {"a", "b", "c"};
  const auto same = rouge_n(x, x, 2);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.f1, 1.0);
  const auto none = rouge_n(W{"a", "b"}, W{"c", "d"}, 2);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_THROW(rouge_n(x, x, 0), Error);
}

TEST(Rouge, RepeatedNgramsAreClipped) {
  // Candidate repeats "a" three times; reference has it twice.
  const auto s = rouge_n(W{"a", "a", "a"}, W{"a", "a", "b"}, 1);
  EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
}

TEST(Rouge, LcsExample) {
  const auto s = rouge_l(W{"a", "b", "c", "d"}, W{"a", "c", "d"});
  EXPECT_EQ(lcs_length(W{"a", "b", "c", "d"}, W{"a", "c", "d"}), 3u);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  const auto empty = rouge_l(W{}, W{"a"});
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.precision, 0.0);
}

TEST(Rouge, OracleScoreExample) {
  const double expected = (2.0 / 3.0 + 1.0 / 2.0 + 2.0 / 3.0) / 3.0;
  EXPECT_NEAR(oracle_score(W{"a", "b", "c"}, W{"a", "b", "d"}), expected, 1e-12);
  EXPECT_NEAR(expected, 0.6111111, 1e-6);
  EXPECT_EQ(oracle_score(W{"a", "b"}, W{"a", "b"}), 1.0);
  EXPECT_EQ(oracle_score(W{"a", "b"}, W{"c", "d"}), 0.0);
}

TEST(Rouge, MatchesExhaustiveOracleOnRandomPairs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> a(rng() % 11), b(rng() % 11);
    const int alphabet = 2 + int(rng() % 4);
    for (auto& x : a) x = int(rng() % alphabet);
    for (auto& x : b) x = int(rng() % alphabet);
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto fast = rouge_n(a, b, n);
      const auto slow = oracle::rouge_n(a, b, n);
      EXPECT_NEAR(fast.recall, slow.recall, 1e-12);
      EXPECT_NEAR(fast.precision, slow.precision, 1e-12);
      EXPECT_NEAR(fast.f1, slow.f1, 1e-12);
    }
    EXPECT_EQ(lcs_length(a, b), oracle::lcs_exhaustive(a, b));
    const auto l = rouge_l(a, b);
    const auto ls = oracle::rouge_l(a, b);
    EXPECT_NEAR(l.recall, ls.recall, 1e-12);
    EXPECT_NEAR(l.precision, ls.precision, 1e-12);
    EXPECT_NEAR(l.f1, ls.f1, 1e-12);
  }
}

TEST(Rouge, ScoresStayInUnitInterval) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(rng() % 15), b(rng() % 15);
    for (auto& x : a) x = int(rng() % 5);
    for (auto& x : b) x = int(rng() % 5);
    for (const auto& s : {rouge_n(a, b, 1), rouge_n(a, b, 2), rouge_l(a, b)}) {
      EXPECT_GE(s.recall, 0.0);
      EXPECT_LE(s.recall, 1.0);
      EXPECT_GE(s.f1, 0.0);
      EXPECT_LE(s.f1, 1.0);
    }
    // Swapping roles swaps recall and precision.
    const auto ab = rouge_n(a, b, 1), ba = rouge_n(b, a, 1);
    EXPECT_NEAR(ab.recall, ba.precision, 1e-12);
  }
}
