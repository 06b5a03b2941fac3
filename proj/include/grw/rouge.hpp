#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <vector>

#include "grw/error.hpp"

namespace grw {

struct RougeScore {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
};

inline RougeScore make_rouge_score(double overlap, double ref_count, double cand_count) {
  RougeScore s;
  s.recall = ref_count > 0 ? overlap / ref_count : 0.0;
  s.precision = cand_count > 0 ? overlap / cand_count : 0.0;
  s.f1 = s.recall + s.precision > 0 ? 2 * s.recall * s.precision / (s.recall + s.precision) : 0.0;
  return s;
}

template <class Token>
std::map<std::vector<Token>, std::size_t> ngram_counts(const std::vector<Token>& tokens,
                                                       std::size_t n) {
  std::map<std::vector<Token>, std::size_t> counts;
  if (n == 0 || tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<Token>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

// Clipped n-gram overlap.
template <class Token>
RougeScore rouge_n(const std::vector<Token>& candidate, const std::vector<Token>& reference,
                   std::size_t n) {
  if (n == 0) throw Error("rouge_n: order must be >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : ref)
    if (auto it = cand.find(gram); it != cand.end()) overlap += std::min(count, it->second);
  const std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
  const std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  return make_rouge_score(double(overlap), double(ref_total), double(cand_total));
}

template <class Token>
std::size_t lcs_length(const std::vector<Token>& a, const std::vector<Token>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <class Token>
RougeScore rouge_l(const std::vector<Token>& candidate, const std::vector<Token>& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const double lcs = double(lcs_length(candidate, reference));
  return make_rouge_score(lcs, double(reference.size()), double(candidate.size()));
}

// Mean of ROUGE-1, ROUGE-2 and ROUGE-L recall; the oracle matching score.
template <class Token>
double oracle_score(const std::vector<Token>& candidate, const std::vector<Token>& reference) {
  return (rouge_n(candidate, reference, 1).recall + rouge_n(candidate, reference, 2).recall +
          rouge_l(candidate, reference).recall) /
         3.0;
}

}  // namespace grw
