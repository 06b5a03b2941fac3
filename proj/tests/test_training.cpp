#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "grw/synthetic.hpp"
#include "grw/training.hpp"

using namespace grw;

namespace {

ModelConfig tiny_config(std::size_t vocab) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.d_model = 16;
  c.heads = 2;
  c.encoder_layers = 1;
  c.extractor_layers = 1;
  c.decoder_layers = 1;
  c.d_ff = 32;
  c.max_positions = 96;
  c.max_groups = 4;
  c.dropout = 0;
  return c;
}

struct Data {
  Vocab vocab;
  std::vector<SummarySample> samples;
};

Data synthetic(std::size_t n, std::uint64_t seed) {
  SyntheticOptions opt;
  opt.vocab_words = 20;
  const auto raw = gen_synthetic(n, seed, opt);
  Data d{build_vocab(raw, 100), {}};
  for (const auto& r : raw) d.samples.push_back(to_sample(r, d.vocab));
  return d;
}

double mean(std::span<const LossRecord> log) {
  double s = 0;
  for (const auto& r : log) s += r.loss;
  return s / double(log.size());
}

}  // namespace

TEST(Losses, BinaryCrossEntropyExamples) {
  ad::Tensor<double> half({1}, {0.5});
  EXPECT_NEAR(bce_extractor_loss(half, SentenceLabels{1}).item(), 0.693147, 1e-6);
  ad::Tensor<double> two({2}, {0.5, 0.5});
  EXPECT_NEAR(bce_extractor_loss(two, SentenceLabels{1, 0}).item(), 0.693147, 1e-6);
  ad::Tensor<double> close({2}, {1 - 1e-9, 1e-9});
  EXPECT_LT(bce_extractor_loss(close, SentenceLabels{1, 0}).item(), 1e-8);
  EXPECT_THROW(bce_extractor_loss(two, SentenceLabels{1}), Error);
}

TEST(Losses, SmoothedNllExamples) {
  // Gold probability 1 with no smoothing: zero loss.
  ad::Tensor<double> sure({1, 3}, {-1e30, 0.0, -1e30});
  EXPECT_EQ(label_smoothed_nll<double>(sure, std::vector<TokenId>{1}, 0.0).item(), 0.0);
  ad::Tensor<double> uniform({2, 4}, std::vector<double>(8, -std::log(4.0)));
  EXPECT_NEAR(label_smoothed_nll<double>(uniform, std::vector<TokenId>{1, 2}, 0.0).item(), std::log(4.0),
              1e-12);
  EXPECT_NEAR(label_smoothed_nll<double>(uniform, std::vector<TokenId>{1, 2}, 0.1).item(), std::log(4.0),
              1e-12);
}

TEST(Losses, PadPositionsGetZeroGradient) {
  ad::Tensor<double> logits({3, 5}, {0.1, 0.2, 0.3, 0.4, 0.5, 1, 2, 3, 4, 5, -1, 0, 1, 0, -1}, true);
  const std::vector<TokenId> targets = {3, special::pad, 4};
  ad::backward(label_smoothed_nll<double>(ad::log_softmax_rows(logits), targets, 0.1));
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(logits.grad()[5 + j], 0.0);
  double row0 = 0;
  for (std::size_t j = 0; j < 5; ++j) row0 += std::abs(logits.grad()[j]);
  EXPECT_GT(row0, 0.0);
}

TEST(WordDropout, Extremes) {
  std::mt19937_64 rng(1);
  const std::vector<TokenId> tokens = {special::bos, 10, 11, special::sep, 12, special::eos};
  EXPECT_EQ(word_dropout(tokens, 0.0, rng), tokens);
  EXPECT_EQ(word_dropout(tokens, 1.0, rng),
            (std::vector<TokenId>{special::bos, special::unk, special::unk, special::sep, special::unk,
                                  special::eos}));
}

TEST(WordDropout, RateConcentrates) {
  std::mt19937_64 rng(7);
  const std::vector<TokenId> tokens(10000, 42);
  const auto out = word_dropout(tokens, 0.3, rng);
  const double frac = double(std::count(out.begin(), out.end(), special::unk)) / 10000.0;
  EXPECT_NEAR(frac, 0.3, 0.02);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.word_dropout = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainExtractor, DefaultConfigLowersLossOnTinyBatch) {
  auto d = synthetic(4, 3);
  ExtractorModel<double> m(tiny_config(d.vocab.size()), 1);
  TrainConfig c;
  c.steps = 100;
  c.batch_size = 4;
  const double before = evaluate_extractor_loss(m, d.samples);
  const auto r = train_extractor(m, d.samples, c);
  EXPECT_EQ(r.steps_run, 100u);
  EXPECT_LT(evaluate_extractor_loss(m, d.samples), before);
}

TEST(TrainExtractor, SeededRunsAreIdenticalAndZeroStepsChangeNothing) {
  auto d = synthetic(6, 4);
  TrainConfig c;
  c.steps = 20;
  c.ext_warmup = 10;
  ExtractorModel<float> a(tiny_config(d.vocab.size()), 2), b(tiny_config(d.vocab.size()), 2);
  const auto ra = train_extractor(a, d.samples, c);
  const auto rb = train_extractor(b, d.samples, c);
  ASSERT_EQ(ra.log.size(), rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) EXPECT_EQ(ra.log[i].loss, rb.log[i].loss);

  ExtractorModel<float> z(tiny_config(d.vocab.size()), 2), fresh(tiny_config(d.vocab.size()), 2);
  c.steps = 0;
  EXPECT_EQ(train_extractor(z, d.samples, c).steps_run, 0u);
  for (std::size_t i = 0; i < z.parameters().items().size(); ++i) {
    const auto x = z.parameters().items()[i].tensor.values();
    const auto y = fresh.parameters().items()[i].tensor.values();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST(TrainExtractor, UnlabeledSampleIsRejected) {
  auto d = synthetic(2, 5);
  d.samples[1].extraction.reset();
  ExtractorModel<float> m(tiny_config(d.vocab.size()), 2);
  EXPECT_THROW(train_extractor(m, d.samples, TrainConfig{}), Error);
  RewriterModel<float> r(tiny_config(d.vocab.size()), 2);
  EXPECT_THROW(train_rewriter(r, d.samples, TrainConfig{}), Error);
}

TEST(TrainRewriter, FeedsGoldTagsEveryStep) {
  auto d = synthetic(10, 6);
  RewriterModel<float> m(tiny_config(d.vocab.size()), 3);
  TrainConfig c;
  c.steps = 5;
  c.batch_size = 4;
  std::size_t calls = 0;
  TrainHooks hooks;
  hooks.on_decoder_input = [&](const RewriterExample& ex, std::span<const TokenId> tokens,
                               std::span<const GroupTag> tags) {
    ++calls;
    // Find the sample this example came from via its target.
    const SummarySample* src = nullptr;
    for (const auto& s : d.samples)
      if (assemble_decoder_sequence(s.summary).token_ids == ex.target.token_ids) src = &s;
    ASSERT_NE(src, nullptr);
    const auto gold = tag_target(src->summary).tags;
    ASSERT_EQ(tags.size(), gold.size() - 1);
    EXPECT_TRUE(std::equal(tags.begin(), tags.end(), gold.begin()));
    EXPECT_EQ(tokens.size(), tags.size());
    const auto src_tags = tag_source(src->document, Extraction{*src->extraction});
    for (std::size_t s = 0; s < ex.input.num_sentences(); ++s)
      EXPECT_EQ(ex.input.group_tags[ex.input.cls_positions[s]], src_tags[s]);
  };
  train_rewriter(m, d.samples, c, hooks);
  EXPECT_EQ(calls, 20u);
}

TEST(TrainRewriter, LossFallsOnSmallSyntheticSet) {
  auto d = synthetic(100, 7);
  RewriterModel<float> m(tiny_config(d.vocab.size()), 4);
  TrainConfig c;
  c.steps = 300;
  c.batch_size = 8;
  c.lr_enc = c.lr_dec = 0.05;
  c.warmup_enc = c.warmup_dec = 100;
  const auto r = train_rewriter(m, d.samples, c);
  const std::span<const LossRecord> log(r.log);
  EXPECT_LT(mean(log.last(30)), 0.85 * mean(log.first(10)));
  // The frozen row of the tag table never moves.
  for (float v : m.tag_embedding(0)) EXPECT_EQ(v, 0.0f);
}

TEST(TrainRewriter, WordDropoutChangesTrajectoryAndStopHookWorks) {
  auto d = synthetic(10, 8);
  TrainConfig c;
  c.steps = 6;
  c.batch_size = 2;
  RewriterModel<float> a(tiny_config(d.vocab.size()), 5), b(tiny_config(d.vocab.size()), 5);
  const auto ra = train_rewriter(a, d.samples, c);
  c.word_dropout = 0;
  const auto rb = train_rewriter(b, d.samples, c);
  bool differs = false;
  for (std::size_t i = 0; i < ra.log.size(); ++i) differs |= ra.log[i].loss != rb.log[i].loss;
  EXPECT_TRUE(differs);

  RewriterModel<float> s(tiny_config(d.vocab.size()), 5);
  TrainHooks hooks;
  hooks.on_step = [](const LossRecord& r) { return r.step == 3; };
  EXPECT_EQ(train_rewriter(s, d.samples, c, hooks).steps_run, 3u);
}

TEST(TrainRewriter, DualSchedulesAreLogged) {
  auto d = synthetic(4, 9);
  RewriterModel<float> m(tiny_config(d.vocab.size()), 5);
  TrainConfig c;
  c.steps = 3;
  const auto r = train_rewriter(m, d.samples, c);
  for (const auto& rec : r.log) {
    EXPECT_DOUBLE_EQ(rec.lr_enc, ad::lr_at({c.lr_enc, double(c.warmup_enc)}, rec.step));
    EXPECT_DOUBLE_EQ(rec.lr_dec, ad::lr_at({c.lr_dec, double(c.warmup_dec)}, rec.step));
  }
  const auto path = (std::filesystem::temp_directory_path() / "grw_loss.csv").string();
  write_loss_log(path, r.log);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,lr_enc,lr_dec,loss");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3u);
}
