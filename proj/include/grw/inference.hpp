#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grw/corpus.hpp"
#include "grw/grouping.hpp"
#include "grw/oracle.hpp"
#include "grw/transformer.hpp"

namespace grw {

struct SelectionPolicy {
  std::size_t min_sel = 3;
  std::size_t max_sel = 5;
  double threshold = 0.35;

  void validate() const {
    if (min_sel < 1 || min_sel > max_sel) throw ConfigError("selection policy needs 1 <= min_sel <= max_sel");
    if (threshold < 0 || threshold > 1) throw ConfigError("selection threshold must be in [0,1]");
  }
};

// Ranks sentences by probability (ties: lower index first). The top min_sel
// are always taken; ranks min_sel+1..max_sel are taken when their
// probability exceeds the threshold. Result is in document order.
inline std::vector<std::size_t> select_sentences(std::span<const double> probs,
                                                 const SelectionPolicy& policy) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  std::vector<std::size_t> chosen;
  for (std::size_t rank = 0; rank < order.size() && rank < policy.max_sel; ++rank) {
    const std::size_t i = order[rank];
    if (rank < policy.min_sel || probs[i] > policy.threshold) chosen.push_back(i);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

struct BeamParams {
  std::size_t beam_size = 5;
  std::size_t min_length = 50;
  std::size_t max_length = 200;
  double alpha = 0.95;
  bool trigram_blocking = true;

  void validate() const {
    if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
    if (min_length < 1 || min_length > max_length)
      throw ConfigError("beam lengths need 1 <= min_length <= max_length");
  }
};

// (5 + len)^alpha / 6^alpha
inline double length_penalty(std::size_t len, double alpha) {
  return std::pow((5.0 + double(len)) / 6.0, alpha);
}

using Trigram = std::array<TokenId, 3>;

struct Hypothesis {
  std::vector<TokenId> tokens;  // BOS first
  std::vector<GroupTag> tags;   // tag of each entry in tokens
  double log_prob = 0;
  std::set<Trigram> trigrams;   // trigrams over the generated tokens (BOS excluded)
  bool finished = false;

  std::size_t generated() const { return tokens.size() - 1; }
  double score(double alpha) const { return log_prob / length_penalty(generated(), alpha); }
};

struct BeamResult {
  std::vector<TokenId> tokens;  // generated tokens, BOS excluded, EOS included when finished
  std::vector<GroupTag> tags;
  double log_prob = 0;
  double score = 0;
  bool finished = false;
  bool unfinished_warning = false;
  std::size_t clamped_steps = 0;  // steps where the tag schedule saturated at K
  std::vector<Hypothesis> finished_pool;
};

template <class Real>
BeamResult beam_search(const RewriterModel<Real>& model, const EncodedInput& input,
                       std::size_t num_groups, const BeamParams& params) {
  params.validate();
  if (num_groups < 1) throw Error("beam_search: need at least one group");
  if (num_groups > model.config().max_groups)
    throw Error("beam_search: " + std::to_string(num_groups) + " groups exceed max_groups " +
                std::to_string(model.config().max_groups));
  ad::NoGradGuard guard;
  const auto memory = model.encode(input);
  const std::size_t max_len = std::min(params.max_length, model.config().max_positions - 1);
  const double neg_inf = -std::numeric_limits<double>::infinity();

  BeamResult result;
  std::vector<Hypothesis> alive(1);
  alive[0].tokens = {special::bos};
  alive[0].tags = {1};
  std::vector<Hypothesis> finished;

  struct Candidate {
    double log_prob;
    std::size_t hyp;
    TokenId token;
  };

  for (std::size_t step = 1; step <= max_len && !alive.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const auto& hyp = alive[h];
      const auto logp = model.decoder_forward(hyp.tokens, hyp.tags, memory);
      const std::size_t len_after = hyp.generated() + 1;
      const std::size_t n = hyp.tokens.size();
      for (TokenId w = 0; w < logp.size(); ++w) {
        if (w == special::pad || w == special::bos || w == special::cls) continue;
        if (w == special::eos && len_after < params.min_length) continue;
        if (w != special::eos && len_after == max_len && len_after >= params.min_length) continue;
        if (params.trigram_blocking && hyp.generated() >= 2 &&
            hyp.trigrams.count({hyp.tokens[n - 2], hyp.tokens[n - 1], w}))
          continue;
        const double lp = hyp.log_prob + double(logp[w]);
        if (lp == neg_inf) continue;
        cands.push_back({lp, h, w});
      }
    }
    if (cands.empty()) break;
    const std::size_t keep = std::min(params.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.hyp != b.hyp) return a.hyp < b.hyp;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = cands[c];
      Hypothesis h = alive[cand.hyp];
      const std::size_t n = h.tokens.size();
      if (h.generated() >= 2) h.trigrams.insert({h.tokens[n - 2], h.tokens[n - 1], cand.token});
      const auto unclamped = decode_tag_schedule(h.tokens);
      const auto tag = decode_tag_schedule(h.tokens, num_groups);
      if (tag != unclamped) ++result.clamped_steps;
      h.tokens.push_back(cand.token);
      h.tags.push_back(tag);
      h.log_prob = cand.log_prob;
      if (cand.token == special::eos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
    if (finished.size() >= params.beam_size) break;
  }

  const auto better = [&](const Hypothesis& a, const Hypothesis& b) {
    return a.score(params.alpha) > b.score(params.alpha);
  };
  const Hypothesis* best = nullptr;
  if (!finished.empty()) {
    best = &*std::min_element(finished.begin(), finished.end(),
                              [&](const auto& a, const auto& b) { return better(a, b); });
    result.finished = true;
  } else if (!alive.empty()) {
    best = &*std::min_element(alive.begin(), alive.end(),
                              [&](const auto& a, const auto& b) { return better(a, b); });
    result.unfinished_warning = true;
  } else {
    result.unfinished_warning = true;
    return result;
  }
  result.tokens.assign(best->tokens.begin() + 1, best->tokens.end());
  result.tags.assign(best->tags.begin() + 1, best->tags.end());
  result.log_prob = best->log_prob;
  result.score = best->score(params.alpha);
  result.finished_pool = std::move(finished);
  return result;
}

struct RewriteOutput {
  std::vector<std::vector<TokenId>> sentence_ids;
  std::vector<std::string> sentences;
  Extraction extraction;  // group k+1 <-> extraction.indices[k]
  std::vector<std::pair<std::size_t, std::size_t>> provenance;  // (group, source sentence)
  bool fewer_sentences_than_groups = false;
  bool unfinished_warning = false;
  BeamResult beam;
};

inline std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out += ' ';
    out += vocab.surface(id);
  }
  return out;
}

// Tags the document from `extraction` (its order defines the groups),
// decodes, and splits the output into sentences.
template <class Real>
RewriteOutput rewrite_with_extraction(const RewriterModel<Real>& model, const Vocab& vocab,
                                      std::span<const Sentence> doc, const Extraction& extraction,
                                      const BeamParams& params) {
  if (extraction.size() == 0) throw Error("rewrite: empty extraction");
  auto input = assemble_encoder_input(doc, tag_source(doc, extraction), model.config().max_positions);
  RewriteOutput out;
  out.extraction = extraction;
  out.beam = beam_search(model, input, extraction.size(), params);
  out.unfinished_warning = out.beam.unfinished_warning;
  out.sentence_ids = split_sentences(out.beam.tokens);
  for (const auto& s : out.sentence_ids) out.sentences.push_back(detokenize(s, vocab));
  const std::size_t k = std::min(out.sentence_ids.size(), extraction.size());
  for (std::size_t g = 0; g < k; ++g) out.provenance.emplace_back(g + 1, extraction.indices[g]);
  out.fewer_sentences_than_groups = out.sentence_ids.size() < extraction.size();
  return out;
}

template <class Real>
std::vector<double> extraction_probabilities(const ExtractorModel<Real>& extractor,
                                             std::span<const Sentence> doc) {
  ad::NoGradGuard guard;
  std::vector<GroupTag> zeros(doc.size(), 0);
  const auto input = assemble_encoder_input(doc, zeros, extractor.config().max_positions);
  const auto probs = extractor.forward(input);
  return {probs.values().begin(), probs.values().end()};
}

// Score -> select (document order) -> tag -> encode -> beam search -> split.
template <class Real>
RewriteOutput rewrite_pipeline(std::span<const Sentence> doc, const ExtractorModel<Real>& extractor,
                               const RewriterModel<Real>& rewriter, const Vocab& vocab,
                               const SelectionPolicy& policy, const BeamParams& params) {
  policy.validate();
  const auto probs = extraction_probabilities(extractor, doc);
  auto selected = select_sentences(probs, policy);
  if (selected.size() > rewriter.config().max_groups) selected.resize(rewriter.config().max_groups);
  return rewrite_with_extraction(rewriter, vocab, doc, Extraction{selected}, params);
}

}  // namespace grw
