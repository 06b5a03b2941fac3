#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "grw/autodiff/gradcheck.hpp"
#include "grw/grouping.hpp"
#include "grw/training.hpp"
#include "grw/transformer.hpp"

namespace grw {

// Central-difference check of every parameter of a small 2+2-layer rewriter
// (and an extractor) on one random example, one result per parameter tensor.
inline std::vector<ad::GradCheckResult> check_composite(std::uint64_t seed, double tol = 1e-4) {
  std::mt19937_64 rng(seed);
  ModelConfig mc;
  mc.vocab_size = 14;
  mc.d_model = 8;
  mc.heads = 2;
  mc.encoder_layers = 2;
  mc.extractor_layers = 1;
  mc.decoder_layers = 2;
  mc.d_ff = 16;
  mc.max_positions = 24;
  mc.max_groups = 3;
  mc.dropout = 0;

  std::uniform_int_distribution<TokenId> word(special::count, mc.vocab_size - 1);
  auto sentence = [&](std::size_t len) {
    Sentence s;
    for (std::size_t i = 0; i < len; ++i) s.ids.push_back(word(rng));
    return s;
  };
  std::vector<Sentence> doc = {sentence(3), sentence(2), sentence(4)};
  std::vector<Sentence> summary = {doc[2], doc[0]};
  summary[0].ids.pop_back();

  std::vector<ad::GradCheckResult> out;

  RewriterModel<double> rewriter(mc, rng());
  const auto input = assemble_encoder_input(doc, tag_source(doc, Extraction{{2, 0}}), mc.max_positions);
  const auto target = assemble_decoder_sequence(summary);
  const std::size_t n = target.token_ids.size() - 1;
  const std::span<const TokenId> tokens(target.token_ids);
  const std::span<const GroupTag> tags(target.group_tags);
  auto rewriter_fn = [&] {
    auto logp = rewriter.decode(rewriter.encode(input), tokens.first(n), tags.first(n));
    return label_smoothed_nll<double>(logp, tokens.subspan(1), 0.1);
  };
  for (auto& p : rewriter.parameters().items())
    out.push_back(ad::check_gradients("rewriter." + p.name, {p.tensor}, rewriter_fn, 1e-5, tol));
  rewriter.parameters().zero_grad();

  ExtractorModel<double> extractor(mc, rng());
  const std::vector<GroupTag> zeros(doc.size(), 0);
  const auto ext_input = assemble_encoder_input(doc, zeros, mc.max_positions);
  const SentenceLabels labels = {1, 0, 1};
  auto extractor_fn = [&] { return bce_extractor_loss(extractor.forward(ext_input), labels); };
  for (auto& p : extractor.parameters().items())
    out.push_back(ad::check_gradients("extractor." + p.name, {p.tensor}, extractor_fn, 1e-5, tol));
  extractor.parameters().zero_grad();
  return out;
}

}  // namespace grw
