#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "grw/corpus.hpp"
#include "grw/oracle.hpp"
#include "grw/synthetic.hpp"

using namespace grw;

namespace {

Sentence words(std::vector<std::string> w) {
  Sentence s;
  s.words = std::move(w);
  s.ids.assign(s.words.size(), special::unk);
  return s;
}

}  // namespace

TEST(Oracle, VerbatimCopyIsFound) {
  std::vector<Sentence> doc = {words({"a", "b"}), words({"c", "d"}), words({"e", "f"}),
                               words({"g", "h", "i"})};
  std::vector<Sentence> summary = {doc[3]};
  EXPECT_EQ(label_extractions(doc, summary).indices, (std::vector<std::size_t>{3}));
}

TEST(Oracle, DocumentEqualsSummaryGivesIdentity) {
  std::vector<Sentence> doc = {words({"a", "b"}), words({"c", "d"}), words({"e", "f"})};
  EXPECT_EQ(label_extractions(doc, doc).indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Oracle, CollisionFallsToNextBest) {
  // Both summary sentences match document sentence 0 best; the second one
  // must take its best remaining match.
  std::vector<Sentence> doc = {words({"x", "y", "z"}), words({"x", "q", "r"}), words({"m", "n"})};
  std::vector<Sentence> summary = {words({"x", "y", "z"}), words({"x", "y"})};
  const auto e = label_extractions(doc, summary);
  EXPECT_EQ(e.indices, (std::vector<std::size_t>{0, 1}));

  // Brute force over every injective assignment processed greedily in order
  // agrees: the second sentence's best among {1,2} is 1.
  EXPECT_GT(oracle_score(doc[1].words, summary[1].words), oracle_score(doc[2].words, summary[1].words));
}

TEST(Oracle, TiesGoToLowestIndex) {
  std::vector<Sentence> doc = {words({"p", "q"}), words({"a", "b"}), words({"a", "b"})};
  std::vector<Sentence> summary = {words({"a", "b"})};
  EXPECT_EQ(label_extractions(doc, summary).indices, (std::vector<std::size_t>{1}));
}

TEST(Oracle, Errors) {
  std::vector<Sentence> doc = {words({"a"})};
  std::vector<Sentence> summary = {words({"a"}), words({"b"})};
  EXPECT_THROW(label_extractions(doc, summary), Error);
  EXPECT_THROW(extraction_to_labels(Extraction{{3}}, 2), Error);
}

TEST(Oracle, Labels) {
  EXPECT_EQ(extraction_to_labels(Extraction{{2, 0}}, 4), (SentenceLabels{1, 0, 1, 0}));
  EXPECT_EQ(extraction_to_labels(Extraction{{0}}, 1), (SentenceLabels{1}));
  EXPECT_EQ(extraction_to_labels(Extraction{{1, 0, 2}}, 3), (SentenceLabels{1, 1, 1}));
}

TEST(Oracle, GreedyStepsAreCertifiedByRescoring) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sentence> doc, summary;
    const std::size_t n = 1 + rng() % 8, k = 1 + rng() % n;
    auto random_sentence = [&] {
      std::vector<std::string> w(1 + rng() % 6);
      for (auto& x : w) x = std::string(1, char('a' + rng() % 6));
      return words(w);
    };
    for (std::size_t i = 0; i < n; ++i) doc.push_back(random_sentence());
    for (std::size_t i = 0; i < k; ++i) summary.push_back(random_sentence());
    const auto e = label_extractions(doc, summary);
    ASSERT_EQ(e.size(), k);
    std::vector<bool> taken(n, false);
    for (std::size_t s = 0; s < k; ++s) {
      const std::size_t pick = e.indices[s];
      ASSERT_LT(pick, n);
      EXPECT_FALSE(taken[pick]);
      const double score = oracle_score(doc[pick].words, summary[s].words);
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || i == pick) continue;
        const double other = oracle_score(doc[i].words, summary[s].words);
        EXPECT_TRUE(score > other || (score == other && pick < i));
      }
      taken[pick] = true;
    }
  }
}

TEST(Oracle, RecoversPlantedSyntheticExtraction) {
  const auto raw = gen_synthetic(300, 8);
  const auto vocab = build_vocab(raw, 1000);
  for (const auto& r : raw) {
    const auto s = to_sample(r, vocab);
    EXPECT_EQ(label_extractions(s).indices, *r.extraction);
  }
}
