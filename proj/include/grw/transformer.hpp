#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "grw/autodiff/ops.hpp"
#include "grw/autodiff/optim.hpp"
#include "grw/corpus.hpp"

namespace grw {

using ad::ParamGroup;
using ad::ParameterSet;
using ad::Tensor;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t extractor_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t d_ff = 256;
  std::size_t max_positions = 512;
  std::size_t max_groups = 8;  // K_max
  double dropout = 0.1;
  // false: the group-tag table stays all-zero and is never trained.
  bool use_group_tags = true;

  void validate() const {
    if (vocab_size <= special::count) throw Error("model: vocab_size must exceed reserved tokens");
    if (d_model == 0 || heads == 0 || d_model % heads != 0)
      throw Error("model: d_model must be a positive multiple of heads");
    if (max_groups < 1) throw Error("model: max_groups must be >= 1");
    if (max_positions < 3) throw Error("model: max_positions must be >= 3");
    if (dropout < 0 || dropout >= 1) throw Error("model: dropout must be in [0,1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

// Per-call switches: dropout is active only when training.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
  // Receives every attention probability matrix [queries, keys].
  std::function<void(const std::string&, std::span<const double>, std::size_t rows,
                     std::size_t cols)>
      attention_observer;
};

namespace nn {

template <class Real>
Tensor<Real> drop(const Tensor<Real>& x, const ForwardContext& ctx) {
  if (!ctx.training || ctx.dropout <= 0 || !ctx.rng) return x;
  return ad::dropout(x, ctx.dropout, *ctx.rng);
}

template <class Real>
Tensor<Real> normal_init(ad::Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<Real> v(ad::numel(shape));
  for (auto& x : v) x = Real(dist(rng));
  return Tensor<Real>(std::move(shape), std::move(v));
}

template <class Real>
Tensor<Real> xavier_init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / double(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<Real> v(in * out);
  for (auto& x : v) x = Real(dist(rng));
  return Tensor<Real>({in, out}, std::move(v));
}

template <class Real>
struct Linear {
  Tensor<Real> weight, bias;

  Linear() = default;
  Linear(ParameterSet<Real>& ps, const std::string& name, std::size_t in, std::size_t out,
         ParamGroup group, std::mt19937_64& rng)
      : weight(ps.add(name + ".weight", xavier_init<Real>(in, out, rng), group)),
        bias(ps.add(name + ".bias", Tensor<Real>::zeros({out}), group)) {}

  Tensor<Real> operator()(const Tensor<Real>& x) const {
    return ad::add_row(ad::matmul(x, weight), bias);
  }
};

template <class Real>
struct LayerNorm {
  Tensor<Real> gain, bias;

  LayerNorm() = default;
  LayerNorm(ParameterSet<Real>& ps, const std::string& name, std::size_t d, ParamGroup group)
      : gain(ps.add(name + ".gain", Tensor<Real>({d}, std::vector<Real>(d, Real(1))), group)),
        bias(ps.add(name + ".bias", Tensor<Real>::zeros({d}), group)) {}

  Tensor<Real> operator()(const Tensor<Real>& x) const {
    return ad::layer_norm(x, gain, bias, Real(1e-6));
  }
};

inline std::vector<std::uint8_t> causal_mask(std::size_t n) {
  std::vector<std::uint8_t> mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) mask[i * n + j] = 1;
  return mask;
}

template <class Real>
struct MultiHeadAttention {
  Linear<Real> q, k, v, o;
  std::size_t heads = 1;
  std::string name;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet<Real>& ps, const std::string& n, std::size_t d, std::size_t h,
                     ParamGroup group, std::mt19937_64& rng)
      : q(ps, n + ".q", d, d, group, rng),
        k(ps, n + ".k", d, d, group, rng),
        v(ps, n + ".v", d, d, group, rng),
        o(ps, n + ".o", d, d, group, rng),
        heads(h),
        name(n) {}

  Tensor<Real> operator()(const Tensor<Real>& query, const Tensor<Real>& memory, bool causal,
                          const ForwardContext& ctx) const {
    const Tensor<Real> qs = q(query), ks = k(memory), vs = v(memory);
    const std::size_t d = qs.cols(), dk = d / heads;
    const Real inv = Real(1.0 / std::sqrt(double(dk)));
    std::vector<std::uint8_t> mask;
    if (causal) mask = causal_mask(query.rows());
    std::vector<Tensor<Real>> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      auto qh = ad::slice_cols(qs, h * dk, (h + 1) * dk);
      auto kh = ad::slice_cols(ks, h * dk, (h + 1) * dk);
      auto vh = ad::slice_cols(vs, h * dk, (h + 1) * dk);
      auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv);
      if (causal)
        scores = ad::masked_fill<Real>(scores, mask, -std::numeric_limits<Real>::infinity());
      auto probs = ad::softmax_rows(scores);
      if (ctx.attention_observer) {
        std::vector<double> p(probs.values().begin(), probs.values().end());
        ctx.attention_observer(name + ".head" + std::to_string(h), p, probs.rows(), probs.cols());
      }
      outs.push_back(ad::matmul(probs, vh));
    }
    return o(heads == 1 ? outs[0] : ad::concat_cols(outs));
  }
};

template <class Real>
struct FeedForward {
  Linear<Real> in, out;

  FeedForward() = default;
  FeedForward(ParameterSet<Real>& ps, const std::string& n, std::size_t d, std::size_t ff,
              ParamGroup group, std::mt19937_64& rng)
      : in(ps, n + ".in", d, ff, group, rng), out(ps, n + ".out", ff, d, group, rng) {}

  Tensor<Real> operator()(const Tensor<Real>& x) const { return out(ad::relu(in(x))); }
};

// Pre-norm transformer encoder block.
template <class Real>
struct EncoderLayer {
  LayerNorm<Real> ln_attn, ln_ff;
  MultiHeadAttention<Real> attn;
  FeedForward<Real> ff;

  EncoderLayer(ParameterSet<Real>& ps, const std::string& n, const ModelConfig& c,
               ParamGroup group, std::mt19937_64& rng)
      : ln_attn(ps, n + ".ln_attn", c.d_model, group),
        ln_ff(ps, n + ".ln_ff", c.d_model, group),
        attn(ps, n + ".attn", c.d_model, c.heads, group, rng),
        ff(ps, n + ".ff", c.d_model, c.d_ff, group, rng) {}

  Tensor<Real> operator()(const Tensor<Real>& x, const ForwardContext& ctx) const {
    auto h = ln_attn(x);
    auto y = ad::add(x, drop(attn(h, h, false, ctx), ctx));
    return ad::add(y, drop(ff(ln_ff(y)), ctx));
  }
};

// Pre-norm decoder block: causal self-attention, cross-attention, feed-forward.
template <class Real>
struct DecoderLayer {
  LayerNorm<Real> ln_self, ln_cross, ln_ff;
  MultiHeadAttention<Real> self_attn, cross_attn;
  FeedForward<Real> ff;

  DecoderLayer(ParameterSet<Real>& ps, const std::string& n, const ModelConfig& c,
               std::mt19937_64& rng)
      : ln_self(ps, n + ".ln_self", c.d_model, ParamGroup::decoder),
        ln_cross(ps, n + ".ln_cross", c.d_model, ParamGroup::decoder),
        ln_ff(ps, n + ".ln_ff", c.d_model, ParamGroup::decoder),
        self_attn(ps, n + ".self", c.d_model, c.heads, ParamGroup::decoder, rng),
        cross_attn(ps, n + ".cross", c.d_model, c.heads, ParamGroup::decoder, rng),
        ff(ps, n + ".ff", c.d_model, c.d_ff, ParamGroup::decoder, rng) {}

  Tensor<Real> operator()(const Tensor<Real>& x, const Tensor<Real>& memory,
                          const ForwardContext& ctx) const {
    auto h = ln_self(x);
    auto y = ad::add(x, drop(self_attn(h, h, true, ctx), ctx));
    y = ad::add(y, drop(cross_attn(ln_cross(y), memory, false, ctx), ctx));
    return ad::add(y, drop(ff(ln_ff(y)), ctx));
  }
};

// Token + position + interval-segment embeddings through an encoder stack.
template <class Real>
struct DocumentEncoder {
  Tensor<Real> token_embedding;  // may be shared with a decoder
  Tensor<Real> position_embedding, segment_embedding;
  std::vector<EncoderLayer<Real>> layers;
  LayerNorm<Real> final_ln;
  std::size_t max_positions = 0;

  DocumentEncoder(ParameterSet<Real>& ps, const std::string& n, const ModelConfig& c,
                  Tensor<Real> tokens, std::mt19937_64& rng)
      : token_embedding(std::move(tokens)), max_positions(c.max_positions) {
    const double std = 1.0 / std::sqrt(double(c.d_model));
    position_embedding = ps.add(n + ".position_embedding",
                                normal_init<Real>({c.max_positions, c.d_model}, std, rng),
                                ParamGroup::encoder);
    segment_embedding = ps.add(n + ".segment_embedding",
                               normal_init<Real>({2, c.d_model}, std, rng), ParamGroup::encoder);
    for (std::size_t i = 0; i < c.encoder_layers; ++i)
      layers.emplace_back(ps, n + ".layer" + std::to_string(i), c, ParamGroup::encoder, rng);
    final_ln = LayerNorm<Real>(ps, n + ".final_ln", c.d_model, ParamGroup::encoder);
  }

  Tensor<Real> operator()(const EncodedInput& in, const ForwardContext& ctx) const {
    if (in.size() == 0) throw Error("encode: empty input");
    if (in.size() > max_positions)
      throw Error("encode: input of " + std::to_string(in.size()) + " tokens exceeds " +
                  std::to_string(max_positions) + " positions");
    std::vector<std::size_t> positions(in.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    auto x = ad::add(ad::add(ad::gather_rows<Real>(token_embedding, in.token_ids),
                             ad::gather_rows<Real>(position_embedding, positions)),
                     ad::gather_rows<Real>(segment_embedding, in.segment_ids));
    x = drop(x, ctx);
    for (const auto& layer : layers) x = layer(x, ctx);
    return final_ln(x);
  }
};

// Fixed sinusoidal encodings for sentence order in the extractor head.
template <class Real>
Tensor<Real> sinusoid_positions(std::size_t count, std::size_t d) {
  std::vector<Real> v(count * d);
  for (std::size_t p = 0; p < count; ++p)
    for (std::size_t i = 0; i < d; ++i) {
      const double angle = double(p) / std::pow(10000.0, double(2 * (i / 2)) / double(d));
      v[p * d + i] = Real(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return Tensor<Real>({count, d}, std::move(v));
}

}  // namespace nn

// Document encoder plus an inter-sentence transformer over [CLS] vectors
// and a sigmoid output layer giving one extraction probability per sentence.
template <class Real>
class ExtractorModel {
 public:
  explicit ExtractorModel(ModelConfig config, std::uint64_t seed = 1) : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const double std = 1.0 / std::sqrt(double(config_.d_model));
    auto tokens = params_.add("token_embedding",
                              nn::normal_init<Real>({config_.vocab_size, config_.d_model}, std, rng),
                              ParamGroup::encoder);
    encoder_.emplace(params_, "encoder", config_, tokens, rng);
    for (std::size_t i = 0; i < config_.extractor_layers; ++i)
      head_layers_.emplace_back(params_, "extractor.layer" + std::to_string(i), config_,
                                ParamGroup::decoder, rng);
    head_ln_ = nn::LayerNorm<Real>(params_, "extractor.final_ln", config_.d_model, ParamGroup::decoder);
    output_ = nn::Linear<Real>(params_, "extractor.output", config_.d_model, 1, ParamGroup::decoder, rng);
  }

  ExtractorModel(const ExtractorModel&) = delete;
  ExtractorModel& operator=(const ExtractorModel&) = delete;
  ExtractorModel(ExtractorModel&&) = default;
  ExtractorModel& operator=(ExtractorModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterSet<Real>& parameters() { return params_; }
  const ParameterSet<Real>& parameters() const { return params_; }

  // Token representations; group tags play no part in extraction.
  Tensor<Real> encode(const EncodedInput& in, const ForwardContext& ctx = {}) const {
    return (*encoder_)(in, ctx);
  }

  // One probability per [CLS] position.
  Tensor<Real> score_sentences(const Tensor<Real>& memory, std::span<const std::size_t> cls_positions,
                               const ForwardContext& ctx = {}) const {
    if (cls_positions.empty()) throw Error("score_sentences: no sentence positions");
    for (std::size_t p : cls_positions)
      if (p >= memory.rows())
        throw Error("score_sentences: position " + std::to_string(p) + " outside memory of " +
                    std::to_string(memory.rows()) + " rows");
    auto h = ad::gather_rows<Real>(memory, cls_positions);
    h = ad::add(h, nn::sinusoid_positions<Real>(cls_positions.size(), config_.d_model));
    for (const auto& layer : head_layers_) h = layer(h, ctx);
    auto logits = output_(head_ln_(h));
    return ad::sigmoid(ad::reshape(logits, {cls_positions.size()}));
  }

  Tensor<Real> forward(const EncodedInput& in, const ForwardContext& ctx = {}) const {
    return score_sentences(encode(in, ctx), in.cls_positions, ctx);
  }

  nn::Linear<Real>& output_layer() { return output_; }

 private:
  ModelConfig config_;
  ParameterSet<Real> params_;
  std::optional<nn::DocumentEncoder<Real>> encoder_;
  std::vector<nn::EncoderLayer<Real>> head_layers_;
  nn::LayerNorm<Real> head_ln_;
  nn::Linear<Real> output_;
};

// Encoder-decoder rewriter. Group-tag embeddings from one table are added
// to the encoder output (source tags) and to the decoder input (target
// tags). The output projection is the token embedding matrix.
template <class Real>
class RewriterModel {
 public:
  explicit RewriterModel(ModelConfig config, std::uint64_t seed = 1) : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = config_.d_model;
    const double std = 1.0 / std::sqrt(double(d));
    token_embedding_ = params_.add("token_embedding",
                                   nn::normal_init<Real>({config_.vocab_size, d}, std, rng),
                                   ParamGroup::decoder);
    encoder_.emplace(params_, "encoder", config_, token_embedding_, rng);

    auto tags = nn::normal_init<Real>({config_.max_groups + 1, d}, std, rng);
    auto tv = tags.mutable_values();
    if (config_.use_group_tags)
      std::fill_n(tv.begin(), d, Real(0));
    else
      std::fill(tv.begin(), tv.end(), Real(0));
    group_tags_ = params_.add("group_tag_table", tags, ParamGroup::decoder);
    auto& entry = params_.at("group_tag_table");
    entry.frozen_rows = {0};
    entry.trainable = config_.use_group_tags;

    decoder_positions_ = params_.add("decoder.position_embedding",
                                     nn::normal_init<Real>({config_.max_positions, d}, std, rng),
                                     ParamGroup::decoder);
    for (std::size_t i = 0; i < config_.decoder_layers; ++i)
      decoder_layers_.emplace_back(params_, "decoder.layer" + std::to_string(i), config_, rng);
    decoder_ln_ = nn::LayerNorm<Real>(params_, "decoder.final_ln", d, ParamGroup::decoder);
  }

  RewriterModel(const RewriterModel&) = delete;
  RewriterModel& operator=(const RewriterModel&) = delete;
  RewriterModel(RewriterModel&&) = default;
  RewriterModel& operator=(RewriterModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterSet<Real>& parameters() { return params_; }
  const ParameterSet<Real>& parameters() const { return params_; }

  const Tensor<Real>& token_embedding() const { return token_embedding_; }
  const Tensor<Real>& output_projection() const { return token_embedding_; }
  const Tensor<Real>& group_tag_table() const { return group_tags_; }

  // Row of the shared tag table, as seen by either side.
  std::vector<Real> tag_embedding(GroupTag k) const {
    check_tag(k);
    const std::size_t d = config_.d_model;
    auto v = group_tags_.values();
    return {v.begin() + k * d, v.begin() + (k + 1) * d};
  }

  // H_{X+G}: encoder output plus the source group-tag embeddings.
  Tensor<Real> encode(const EncodedInput& in, const ForwardContext& ctx = {}) const {
    for (GroupTag t : in.group_tags) check_tag(t);
    auto h = (*encoder_)(in, ctx);
    return ad::add(h, ad::gather_rows<Real>(group_tags_, in.group_tags));
  }

  // Log-probabilities [n, V] for the token following each input position.
  Tensor<Real> decode(const Tensor<Real>& memory, std::span<const TokenId> tokens,
                      std::span<const GroupTag> tags, const ForwardContext& ctx = {}) const {
    if (tokens.empty() || tokens.size() != tags.size())
      throw Error("decode: token and tag sequences must be non-empty and aligned");
    if (tokens.size() > config_.max_positions)
      throw Error("decode: prefix of " + std::to_string(tokens.size()) + " tokens exceeds " +
                  std::to_string(config_.max_positions) + " positions");
    for (GroupTag t : tags) check_tag(t);
    std::vector<std::size_t> positions(tokens.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    auto x = ad::add(ad::add(ad::gather_rows<Real>(token_embedding_, tokens),
                             ad::gather_rows<Real>(decoder_positions_, positions)),
                     ad::gather_rows<Real>(group_tags_, tags));
    x = nn::drop(x, ctx);
    for (const auto& layer : decoder_layers_) x = layer(x, memory, ctx);
    auto logits = ad::matmul(decoder_ln_(x), ad::transpose(token_embedding_));
    return ad::log_softmax_rows(logits);
  }

  // Next-token log-probabilities after the last prefix position.
  std::vector<Real> decoder_forward(std::span<const TokenId> prefix,
                                    std::span<const GroupTag> prefix_tags,
                                    const Tensor<Real>& memory) const {
    if (prefix.empty() || prefix.front() != special::bos)
      throw Error("decoder_forward: prefix must begin with BOS");
    ad::NoGradGuard guard;
    auto logp = decode(memory, prefix, prefix_tags);
    const std::size_t V = logp.cols(), last = logp.rows() - 1;
    return {logp.values().begin() + last * V, logp.values().begin() + (last + 1) * V};
  }

 private:
  void check_tag(GroupTag t) const {
    if (t > config_.max_groups)
      throw Error("group tag " + std::to_string(t) + " exceeds max_groups " +
                  std::to_string(config_.max_groups));
  }

  ModelConfig config_;
  ParameterSet<Real> params_;
  Tensor<Real> token_embedding_;
  std::optional<nn::DocumentEncoder<Real>> encoder_;
  Tensor<Real> group_tags_;
  Tensor<Real> decoder_positions_;
  std::vector<nn::DecoderLayer<Real>> decoder_layers_;
  nn::LayerNorm<Real> decoder_ln_;
};

}  // namespace grw
