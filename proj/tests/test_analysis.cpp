#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "grw/analysis.hpp"
#include "oracles.hpp"

using namespace grw;

namespace {

Words random_words(std::mt19937_64& rng, std::size_t max_len, std::size_t alphabet) {
  Words w(rng() % (max_len + 1));
  for (auto& x : w) x = std::string(1, char('a' + rng() % alphabet));
  return w;
}

std::string join(const Words& w) {
  std::string s;
  for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
  return s;
}

}  // namespace

TEST(CorpusRouge, IdentityAndAveraging) {
  std::vector<TextSample> a = {{"1", {"the cat sat", "on the mat"}}};
  auto r = corpus_rouge(a, a);
  EXPECT_DOUBLE_EQ(r.r1, 1.0);
  EXPECT_DOUBLE_EQ(r.r2, 1.0);
  EXPECT_DOUBLE_EQ(r.rl, 1.0);

  std::vector<TextSample> out = {{"1", {"a b"}}, {"2", {"c d"}}};
  std::vector<TextSample> ref = {{"1", {"a x"}}, {"2", {"c d"}}};
  r = corpus_rouge(out, ref);
  EXPECT_DOUBLE_EQ(r.r1, 0.75);
  EXPECT_DOUBLE_EQ(r.r2, 0.5);

  std::vector<TextSample> swapped = {{"2", {"c d"}}, {"1", {"a x"}}};
  EXPECT_THROW(corpus_rouge(out, swapped), Error);
  EXPECT_THROW(corpus_rouge(out, std::span<const TextSample>(ref).first(1)), Error);
}

TEST(NovelNgrams, Examples) {
  const Words doc = {"a", "b", "c", "d"};
  EXPECT_DOUBLE_EQ(novel_ngram_pct(Words{"a", "b", "x", "y"}, doc, 1), 50.0);
  EXPECT_DOUBLE_EQ(novel_ngram_pct(Words{"b", "c"}, doc, 2), 0.0);
  EXPECT_DOUBLE_EQ(novel_ngram_pct(Words{"c", "b"}, doc, 2), 100.0);
  EXPECT_EQ(novel_ngram_pct(Words{"a"}, doc, 2), -1.0);
  EXPECT_THROW(novel_ngram_pct(Words{"a"}, doc, 0), Error);
}

TEST(NovelNgrams, MatchesPairwiseOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_words(rng, 10, 4), d = random_words(rng, 14, 4);
    for (std::size_t n = 1; n <= 3; ++n) EXPECT_DOUBLE_EQ(novel_ngram_pct(s, d, n), oracle::novel_pct(s, d, n));
  }
}

TEST(EditCategories, Examples) {
  const auto src = split_words("the quick brown fox jumped over the lazy dog .");
  EXPECT_EQ(edit_categorize(src, src), EditCategory::unchanged);
  EXPECT_EQ(edit_categorize(src, split_words("the fox jumped over the dog .")), EditCategory::compressed);
  EXPECT_EQ(edit_categorize(split_words("the cat sat"), split_words("the dog sat")), EditCategory::rewritten);
  EXPECT_EQ(edit_categorize(split_words("the cat sat"), split_words("sat the cat")), EditCategory::rewritten);
  EXPECT_EQ(edit_categorize(split_words("a b"), split_words("a b c")), EditCategory::rewritten);
}

TEST(EditCategories, MatchSubsequenceOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_words(rng, 8, 3);
    auto b = a;
    // Bias towards deletions so all three categories show up.
    if (trial % 3 == 0) b = random_words(rng, 8, 3);
    else
      for (std::size_t k = rng() % 3; k > 0 && !b.empty(); --k) b.erase(b.begin() + rng() % b.size());
    EXPECT_EQ(int(edit_categorize(a, b)), oracle::edit_category(a, b)) << join(a) << " | " << join(b);
  }
}

TEST(EditCategories, ScriptCostIsEditDistance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_words(rng, 8, 3), b = random_words(rng, 8, 3);
    const auto ops = edit_script(a, b);
    std::size_t from = 0, to = 0, cost = 0;
    for (auto op : ops) {
      from += op != EditOp::insert;
      to += op != EditOp::remove;
      cost += op != EditOp::keep;
    }
    EXPECT_EQ(from, a.size());
    EXPECT_EQ(to, b.size());
    EXPECT_GE(cost, a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
    EXPECT_LE(cost, std::max(a.size(), b.size()));
  }
}

TEST(EditCategories, FractionsSumToHundred) {
  const std::vector<EditCategory> c = {EditCategory::unchanged, EditCategory::rewritten,
                                       EditCategory::rewritten, EditCategory::compressed};
  const auto f = category_fractions(c);
  EXPECT_DOUBLE_EQ(f.unchanged, 25.0);
  EXPECT_DOUBLE_EQ(f.rewritten, 50.0);
  EXPECT_DOUBLE_EQ(f.unchanged + f.compressed + f.rewritten, 100.0);
  EXPECT_EQ(category_fractions({}).total, 0u);
}

TEST(Redundancy, RepeatedTrigramTypes) {
  EXPECT_EQ(repeated_trigram_types(split_words("a b c a b c")), 1u);
  EXPECT_EQ(repeated_trigram_types(split_words("a b c d")), 0u);
  EXPECT_EQ(repeated_trigram_types(split_words("a a a a")), 1u);
  const std::vector<std::string> two = {"x y z", "x y z"};
  EXPECT_EQ(summary_stream(two).size(), 7u);
  EXPECT_EQ(repeated_trigram_types(summary_stream(two)), 1u);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const auto w = random_words(rng, 14, 2);
    EXPECT_EQ(repeated_trigram_types(w), oracle::repeated_trigrams(w));
  }
  const std::vector<Words> s = {split_words("a b c a b c"), split_words("a b")};
  const auto r = redundancy_report(s);
  EXPECT_DOUBLE_EQ(r.summary_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.mean_repeats, 0.5);
  EXPECT_EQ(redundancy_report({}).total_repeats, 0u);
}

TEST(Length, MeanWords) {
  const std::vector<std::string> s = {std::string(10 * 2 - 1, ' '), ""};
  EXPECT_DOUBLE_EQ(length_stats(s), 0.0);
  std::string ten, twenty;
  for (int i = 0; i < 10; ++i) ten += "w ";
  for (int i = 0; i < 20; ++i) twenty += " w";
  const std::vector<std::string> t = {ten, twenty};
  EXPECT_DOUBLE_EQ(length_stats(t), 15.0);
}

TEST(Analyze, EmptyInputGivesZeroRows) {
  const auto rep = analyze({});
  EXPECT_FALSE(rep.rows.empty());
  for (const auto& [metric, name, value] : rep.rows) EXPECT_EQ(value, 0.0) << metric << "/" << name;
}

TEST(Analyze, ReportAndFiles) {
  std::vector<AnalysisSample> s = {
      {"a", {"the cat sat ."}, {"the cat sat ."}, {"the big cat sat .", "it rained ."}, {{1, 0}}},
      {"b", {"dogs bark", "dogs bark"}, {"dogs bark loudly"}, {"dogs bark ."}, {{1, 0}, {2, 0}}}};
  const auto rep = analyze(s);
  auto get = [&](const std::string& m, const std::string& n) {
    for (const auto& [metric, name, value] : rep.rows)
      if (metric == m && name == n) return value;
    ADD_FAILURE() << m << "/" << n;
    return 0.0;
  };
  EXPECT_DOUBLE_EQ(get("edit_category_pct", "compressed"), 100.0);
  EXPECT_DOUBLE_EQ(get("count", "samples"), 2.0);
  EXPECT_DOUBLE_EQ(get("length", "mean_words"), 4.0);
  EXPECT_DOUBLE_EQ(get("redundancy", "summary_rate"), 0.0);
  ASSERT_EQ(rep.details.size(), 2u);
  EXPECT_EQ(rep.details[1]["categories"].size(), 2u);

  const auto dir = std::filesystem::temp_directory_path();
  write_report(rep, (dir / "grw_report.csv").string(), (dir / "grw_details.jsonl").string());
  std::ifstream csv(dir / "grw_report.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "metric,name,value");

  s[0].provenance = {{2, 0}};
  EXPECT_THROW(analyze(s), Error);
}
