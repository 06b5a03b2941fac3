#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grw/corpus.hpp"
#include "grw/error.hpp"

namespace grw {

struct SyntheticOptions {
  std::size_t vocab_words = 100;
  std::size_t min_sentences = 6, max_sentences = 10;
  std::size_t min_words = 4, max_words = 8;
  std::size_t min_groups = 2, max_groups = 3;
};

// Documents of random-token sentences; the summary copies K of them verbatim
// in a random order, and that order is stored as the extraction. Tokens within
// a sentence are distinct, and no sentence's words are a subset of another's,
// so every summary sentence has exactly one perfect match in its document.
inline std::vector<RawSample> gen_synthetic(std::size_t count, std::uint64_t seed,
                                            const SyntheticOptions& opt = {}) {
  if (count < 1) throw Error("gen_synthetic: count must be >= 1");
  if (opt.max_words > opt.vocab_words || opt.min_words < 1 || opt.min_words > opt.max_words ||
      opt.min_sentences > opt.max_sentences || opt.min_groups < 1 || opt.min_groups > opt.max_groups ||
      opt.max_groups > opt.min_sentences)
    throw Error("gen_synthetic: inconsistent options");
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::vector<std::size_t> pool(opt.vocab_words);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;

  std::vector<RawSample> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t num_sent = uniform(opt.min_sentences, opt.max_sentences);
    std::vector<std::vector<std::size_t>> sents;
    while (sents.size() < num_sent) {
      std::shuffle(pool.begin(), pool.end(), rng);
      std::vector<std::size_t> s(pool.begin(),
                                 pool.begin() + std::ptrdiff_t(uniform(opt.min_words, opt.max_words)));
      std::vector<std::size_t> sorted_s = s;
      std::sort(sorted_s.begin(), sorted_s.end());
      bool clash = false;
      for (const auto& t : sents) {
        std::vector<std::size_t> sorted_t = t;
        std::sort(sorted_t.begin(), sorted_t.end());
        if (std::includes(sorted_s.begin(), sorted_s.end(), sorted_t.begin(), sorted_t.end()) ||
            std::includes(sorted_t.begin(), sorted_t.end(), sorted_s.begin(), sorted_s.end())) {
          clash = true;
          break;
        }
      }
      if (!clash) sents.push_back(std::move(s));
    }

    RawSample sample;
    sample.id = "synth-" + std::to_string(n);
    for (const auto& s : sents) {
      std::string text;
      for (std::size_t w : s) text += (text.empty() ? "w" : " w") + std::to_string(w);
      sample.document.push_back(std::move(text));
    }
    std::vector<std::size_t> idx(num_sent);
    for (std::size_t i = 0; i < num_sent; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(uniform(opt.min_groups, opt.max_groups));
    for (std::size_t i : idx) sample.summary.push_back(sample.document[i]);
    sample.extraction = idx;
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace grw
