#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "grw/autodiff/ops.hpp"
#include "grw/autodiff/optim.hpp"
#include "grw/checkpoint.hpp"
#include "grw/corpus.hpp"
#include "grw/grouping.hpp"
#include "grw/oracle.hpp"
#include "grw/transformer.hpp"

namespace grw {

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  // Extractor: one schedule for all parameters.
  double ext_lr = 2e-3;
  std::size_t ext_warmup = 10000;
  // Rewriter: separate encoder and decoder schedules.
  double lr_enc = 2e-3;
  std::size_t warmup_enc = 20000;
  double lr_dec = 0.2;
  std::size_t warmup_dec = 10000;
  double label_smoothing = 0.1;
  double word_dropout = 0.3;
  double dropout = 0.2;
  double clip_norm = 1.0;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (p < 0 || p > 1) throw ConfigError(std::string(name) + " must be in [0,1]");
    };
    prob(label_smoothing, "label_smoothing");
    prob(word_dropout, "word_dropout");
    prob(dropout, "dropout");
    if (dropout >= 1) throw ConfigError("dropout must be below 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (ext_warmup < 1 || warmup_enc < 1 || warmup_dec < 1)
      throw ConfigError("warmup steps must be >= 1");
    if (!(ext_lr > 0) || !(lr_enc > 0) || !(lr_dec > 0))
      throw ConfigError("learning rates must be positive");
  }
};

// Mean over sentences of -[l log p + (1-l) log(1-p)].
template <class Real>
Tensor<Real> bce_extractor_loss(const Tensor<Real>& probs, const SentenceLabels& labels) {
  if (probs.size() != labels.size())
    throw Error("bce_extractor_loss: " + std::to_string(probs.size()) + " probabilities for " +
                std::to_string(labels.size()) + " labels");
  std::vector<Real> l(labels.begin(), labels.end());
  return ad::binary_cross_entropy<Real>(probs, l);
}

// Smoothed NLL averaged over non-PAD target positions.
template <class Real>
Tensor<Real> label_smoothed_nll(const Tensor<Real>& log_probs, std::span<const TokenId> targets,
                                double smoothing) {
  return ad::cross_entropy<Real>(log_probs, targets, smoothing, special::pad);
}

// Replaces each non-special token by UNK with probability p.
template <class Rng>
std::vector<TokenId> word_dropout(std::span<const TokenId> tokens, double p, Rng& rng) {
  std::vector<TokenId> out(tokens.begin(), tokens.end());
  if (p <= 0) return out;
  std::bernoulli_distribution coin(p);
  for (auto& t : out)
    if (!is_special(t) && coin(rng)) t = special::unk;
  return out;
}

struct LossRecord {
  std::size_t step;
  double lr_enc;
  double lr_dec;
  double loss;
};

inline void write_loss_log(const std::string& path, std::span<const LossRecord> log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write loss log " + path);
  out << "step,lr_enc,lr_dec,loss\n";
  out.precision(9);
  for (const auto& r : log) out << r.step << ',' << r.lr_enc << ',' << r.lr_dec << ',' << r.loss << '\n';
}

// Pre-assembled model inputs for one labeled sample.
struct ExtractorExample {
  EncodedInput input;
  SentenceLabels labels;
};

struct RewriterExample {
  EncodedInput input;       // source with gold group tags
  DecoderSequence target;   // teacher-forced tokens and tags
  std::size_t num_groups = 0;
};

inline const std::vector<std::size_t>& require_extraction(const SummarySample& s) {
  if (!s.extraction) throw Error("sample " + s.id + " has no oracle extraction");
  return *s.extraction;
}

inline ExtractorExample make_extractor_example(const SummarySample& s, std::size_t max_positions) {
  const auto& ext = require_extraction(s);
  std::vector<GroupTag> zeros(s.document.size(), 0);
  ExtractorExample ex;
  ex.input = assemble_encoder_input(s.document, zeros, max_positions);
  auto labels = extraction_to_labels(Extraction{ext}, s.document.size());
  labels.resize(ex.input.num_sentences());
  ex.labels = std::move(labels);
  return ex;
}

inline RewriterExample make_rewriter_example(const SummarySample& s, const ModelConfig& config) {
  const Extraction ext{require_extraction(s)};
  if (ext.size() > config.max_groups)
    throw Error("sample " + s.id + " has " + std::to_string(ext.size()) +
                " groups, model supports " + std::to_string(config.max_groups));
  RewriterExample ex;
  ex.input = assemble_encoder_input(s.document, tag_source(s.document, ext), config.max_positions);
  ex.target = assemble_decoder_sequence(s.summary);
  if (ex.target.token_ids.size() > config.max_positions + 1) {
    ex.target.token_ids.resize(config.max_positions + 1);
    ex.target.group_tags.resize(config.max_positions + 1);
  }
  ex.num_groups = ext.size();
  return ex;
}

struct TrainHooks {
  // Called after each optimizer step; returning true stops training.
  std::function<bool(const LossRecord&)> on_step;
  // Sees the decoder input tokens and tags fed for each rewriter example.
  std::function<void(const RewriterExample&, std::span<const TokenId>, std::span<const GroupTag>)>
      on_decoder_input;
  std::function<void(std::size_t step)> on_checkpoint;
};

struct TrainResult {
  std::vector<LossRecord> log;
  std::size_t steps_run = 0;
};

namespace detail {

inline std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t step, std::size_t slot) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(slot)};
  return std::mt19937_64(seq);
}

// Cycles through a fixed number of items in freshly shuffled epochs.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    while (out.size() < batch) {
      if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace detail

// Teacher-forced rewriter loss for one example.
template <class Real>
Tensor<Real> rewriter_loss(const RewriterModel<Real>& model, const RewriterExample& ex,
                           std::span<const TokenId> decoder_input, double smoothing,
                           const ForwardContext& ctx) {
  const auto& tgt = ex.target;
  const std::size_t n = tgt.token_ids.size() - 1;
  auto memory = model.encode(ex.input, ctx);
  auto logp = model.decode(memory, decoder_input.first(n),
                           std::span<const GroupTag>(tgt.group_tags).first(n), ctx);
  return label_smoothed_nll<Real>(logp, std::span<const TokenId>(tgt.token_ids).subspan(1), smoothing);
}

template <class Real>
TrainResult train_extractor(ExtractorModel<Real>& model, std::span<const SummarySample> data,
                            const TrainConfig& config, const TrainHooks& hooks = {}) {
  config.validate();
  if (data.empty()) throw Error("train_extractor: no training data");
  std::vector<ExtractorExample> examples;
  examples.reserve(data.size());
  for (const auto& s : data)
    examples.push_back(make_extractor_example(s, model.config().max_positions));

  TrainResult result;
  ad::AdamState<Real> adam;
  const ad::LrSchedule schedule{config.ext_lr, double(config.ext_warmup)};
  detail::BatchSampler sampler(examples.size(), config.seed);
  auto& params = model.parameters();
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto batch = sampler.next(config.batch_size);
    double total = 0;
    for (std::size_t slot = 0; slot < batch.size(); ++slot) {
      const auto& ex = examples[batch[slot]];
      auto rng = detail::sample_rng(config.seed, step, slot);
      ForwardContext ctx{true, config.dropout, &rng, {}};
      auto loss = bce_extractor_loss(model.forward(ex.input, ctx), ex.labels);
      total += double(loss.item());
      ad::backward(ad::scale(loss, Real(1.0 / double(batch.size()))));
    }
    ad::clip_grad_norm(params, config.clip_norm);
    const double lr = schedule.at(step);
    ad::adam_step<Real>(params, adam, lr);
    LossRecord rec{step, lr, lr, total / double(batch.size())};
    result.log.push_back(rec);
    result.steps_run = step;
    if (hooks.on_checkpoint && config.checkpoint_every && step % config.checkpoint_every == 0)
      hooks.on_checkpoint(step);
    if (hooks.on_step && hooks.on_step(rec)) break;
  }
  return result;
}

template <class Real>
TrainResult train_rewriter(RewriterModel<Real>& model, std::span<const SummarySample> data,
                           const TrainConfig& config, const TrainHooks& hooks = {}) {
  config.validate();
  if (data.empty()) throw Error("train_rewriter: no training data");
  std::vector<RewriterExample> examples;
  examples.reserve(data.size());
  for (const auto& s : data) examples.push_back(make_rewriter_example(s, model.config()));

  TrainResult result;
  ad::AdamState<Real> adam;
  const ad::LrSchedule enc{config.lr_enc, double(config.warmup_enc)};
  const ad::LrSchedule dec{config.lr_dec, double(config.warmup_dec)};
  detail::BatchSampler sampler(examples.size(), config.seed);
  auto& params = model.parameters();
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto batch = sampler.next(config.batch_size);
    double total = 0;
    for (std::size_t slot = 0; slot < batch.size(); ++slot) {
      const auto& ex = examples[batch[slot]];
      auto rng = detail::sample_rng(config.seed, step, slot);
      const auto& tokens = ex.target.token_ids;
      auto input = word_dropout(std::span<const TokenId>(tokens).first(tokens.size() - 1),
                                config.word_dropout, rng);
      if (hooks.on_decoder_input)
        hooks.on_decoder_input(ex, input,
                               std::span<const GroupTag>(ex.target.group_tags).first(input.size()));
      ForwardContext ctx{true, config.dropout, &rng, {}};
      auto loss = rewriter_loss(model, ex, input, config.label_smoothing, ctx);
      total += double(loss.item());
      ad::backward(ad::scale(loss, Real(1.0 / double(batch.size()))));
    }
    ad::clip_grad_norm(params, config.clip_norm);
    const double lr_e = enc.at(step), lr_d = dec.at(step);
    ad::adam_step<Real>(params, adam,
                        [&](ParamGroup g) { return g == ParamGroup::encoder ? lr_e : lr_d; });
    LossRecord rec{step, lr_e, lr_d, total / double(batch.size())};
    result.log.push_back(rec);
    result.steps_run = step;
    if (hooks.on_checkpoint && config.checkpoint_every && step % config.checkpoint_every == 0)
      hooks.on_checkpoint(step);
    if (hooks.on_step && hooks.on_step(rec)) break;
  }
  return result;
}

// Mean teacher-forced loss without dropout or word dropout.
template <class Real>
double evaluate_rewriter_loss(const RewriterModel<Real>& model, std::span<const SummarySample> data,
                              double smoothing) {
  ad::NoGradGuard guard;
  double total = 0;
  for (const auto& s : data) {
    auto ex = make_rewriter_example(s, model.config());
    const auto& t = ex.target.token_ids;
    total += double(rewriter_loss(model, ex, std::span<const TokenId>(t).first(t.size() - 1),
                                  smoothing, {})
                        .item());
  }
  return data.empty() ? 0.0 : total / double(data.size());
}

template <class Real>
double evaluate_extractor_loss(const ExtractorModel<Real>& model, std::span<const SummarySample> data) {
  ad::NoGradGuard guard;
  double total = 0;
  for (const auto& s : data) {
    auto ex = make_extractor_example(s, model.config().max_positions);
    total += double(bce_extractor_loss(model.forward(ex.input), ex.labels).item());
  }
  return data.empty() ? 0.0 : total / double(data.size());
}

}  // namespace grw
