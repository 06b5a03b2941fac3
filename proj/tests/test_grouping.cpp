#include <gtest/gtest.h>

#include <random>

#include "grw/grouping.hpp"

using namespace grw;

namespace {

Sentence ids(std::vector<TokenId> v) {
  Sentence s;
  s.ids = std::move(v);
  return s;
}

}  // namespace

TEST(TagSource, DocumentOrderExtraction) {
  // Seven sentences, extraction {0,4,5}: 1 0 0 0 2 3 0 per sentence.
  EXPECT_EQ(tag_source(7, Extraction{{0, 4, 5}}), (std::vector<GroupTag>{1, 0, 0, 0, 2, 3, 0}));
  std::vector<Sentence> doc = {ids({10, 11}), ids({12}), ids({13}), ids({14}), ids({15, 16}),
                               ids({17}), ids({18})};
  const auto in = assemble_encoder_input(doc, tag_source(doc, Extraction{{0, 4, 5}}), 512);
  // Token-level pattern: a block of 1s, 0s, 2s, 3s, then 0s.
  std::vector<GroupTag> runs;
  for (GroupTag t : in.group_tags)
    if (runs.empty() || runs.back() != t) runs.push_back(t);
  EXPECT_EQ(runs, (std::vector<GroupTag>{1, 0, 2, 3, 0}));
}

TEST(TagSource, SummaryOrderDecidesGroups) {
  EXPECT_EQ(tag_source(3, Extraction{{2, 0}}), (std::vector<GroupTag>{2, 0, 1}));
  EXPECT_EQ(tag_source(3, Extraction{{1}}), (std::vector<GroupTag>{0, 1, 0}));
}

TEST(TagSource, Errors) {
  EXPECT_THROW(tag_source(3, Extraction{}), Error);
  EXPECT_THROW(tag_source(3, Extraction{{3}}), Error);
  EXPECT_THROW(tag_source(3, Extraction{{1, 1}}), Error);
}

TEST(TagTarget, BlocksPerSentence) {
  std::vector<Sentence> summary = {ids({10, 11}), ids({12, 13, 14})};
  const auto g = tag_target(summary);
  EXPECT_EQ(g.num_groups, 2u);
  // BOS + 2 tokens + SEP carry 1; 3 tokens + EOS carry 2.
  EXPECT_EQ(std::count(g.tags.begin(), g.tags.end(), 1u), 4);
  EXPECT_EQ(std::count(g.tags.begin(), g.tags.end(), 2u), 4);
  std::vector<Sentence> one = {ids({10, 11, 12})};
  for (GroupTag t : tag_target(one).tags) EXPECT_EQ(t, 1u);
}

TEST(Schedule, StartsAtOneAndIncrementsAfterSep) {
  const std::vector<TokenId> bos = {special::bos};
  EXPECT_EQ(decode_tag_schedule(bos), 1u);
  const std::vector<TokenId> one_sep = {special::bos, 10, 11, special::sep};
  EXPECT_EQ(decode_tag_schedule(one_sep), 2u);
  const std::vector<TokenId> two_sep = {special::bos, 10, special::sep, 11, special::sep};
  EXPECT_EQ(decode_tag_schedule(two_sep), 3u);
  EXPECT_EQ(decode_tag_schedule(two_sep, 2), 2u);
}

TEST(Schedule, NonDecreasingAndBoundedOnRandomStreams) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> tokens = {special::bos};
    const std::size_t k = 1 + rng() % 4;
    for (int i = 0; i < 30; ++i) tokens.push_back(rng() % 4 == 0 ? special::sep : 10 + rng() % 5);
    const auto tags = decoder_input_tags(tokens, k);
    EXPECT_EQ(tags.front(), 1u);
    for (std::size_t j = 1; j < tags.size(); ++j) {
      EXPECT_GE(tags[j], tags[j - 1]);
      EXPECT_LE(tags[j], k);
    }
  }
}
