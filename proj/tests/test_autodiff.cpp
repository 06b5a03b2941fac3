#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "grw/autodiff/gradcheck.hpp"
#include "grw/autodiff/optim.hpp"
#include "grw/model_gradcheck.hpp"

using namespace grw;
using namespace grw::ad;

TEST(Autodiff, EveryPrimitivePassesCentralDifferences) {
  const auto results = check_primitives(11, 20);
  ASSERT_GE(results.size(), 20u * 20u);
  for (const auto& r : results)
    EXPECT_TRUE(r.passed) << r.name << " " << r.shape << " rel " << r.relative_error;
}

TEST(Autodiff, CompositeEncoderDecoderPasses) {
  for (const auto& r : check_composite(5))
    EXPECT_TRUE(r.passed) << r.name << " rel " << r.relative_error;
}

TEST(Autodiff, GradCheckCatchesAWrongGradient) {
  // A function whose recorded backward is deliberately off by a factor.
  Tensor<double> x({3}, {0.3, -0.2, 0.9});
  auto bad = [&] {
    auto y = sum(mul(x, x));
    return make_result<double>({1}, {y.item()}, {&x}, [px = x.node_ptr()](Node<double>& out) {
      double* g = px->grad_data();
      for (std::size_t i = 0; i < px->value.size(); ++i) g[i] += out.grad[0] * px->value[i];
    });
  };
  EXPECT_FALSE(check_gradients("bad", {x}, bad).passed);
}

TEST(Autodiff, LayerNormOfOneTwoThree) {
  Tensor<double> x({1, 3}, {1, 2, 3});
  Tensor<double> gain({3}, {1, 1, 1}), bias({3}, {0, 0, 0});
  const auto y = layer_norm(x, gain, bias);
  const double sd = std::sqrt(2.0 / 3.0 + 1e-6);
  EXPECT_NEAR(y[0], -1.0 / sd, 1e-12);
  EXPECT_NEAR(y[1], 0.0, 1e-12);
  EXPECT_NEAR(y[2], 1.0 / sd, 1e-12);
  EXPECT_NEAR(y[2], 1.2247, 1e-4);
}

TEST(Autodiff, MatmulShapeMismatchNamesBothShapes) {
  Tensor<double> a = Tensor<double>::zeros({2, 3}), b = Tensor<double>::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
  }
}

TEST(Autodiff, BackwardNeedsAScalar) {
  Tensor<double> a({2}, {1, 2}, true);
  EXPECT_THROW(backward(scale(a, 2.0)), ShapeError);
}

TEST(Autodiff, LeafGradientsAccumulateAcrossBackwardCalls) {
  Tensor<double> a({2}, {1, 2}, true);
  backward(sum(scale(a, 3.0)));
  backward(sum(scale(a, 3.0)));
  EXPECT_DOUBLE_EQ(a.grad()[0], 6.0);
  EXPECT_DOUBLE_EQ(a.grad()[1], 6.0);
}

TEST(Autodiff, SharedSubexpressionGetsBothContributions) {
  Tensor<double> a({1}, {2.0}, true);
  auto b = mul(a, a);
  backward(sum(add(b, b)));  // d/da 2a^2 = 4a
  EXPECT_DOUBLE_EQ(a.grad()[0], 8.0);
}

TEST(Autodiff, NoGradGuardRecordsNothing) {
  Tensor<double> a({2}, {1, 2}, true);
  NoGradGuard guard;
  const auto y = sum(a);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autodiff, BinaryCrossEntropyAtOneHalf) {
  Tensor<double> p({2}, {0.5, 0.5});
  std::vector<double> labels = {1, 0};
  EXPECT_NEAR(binary_cross_entropy<double>(p, labels).item(), std::log(2.0), 1e-12);
}

TEST(Autodiff, SmoothedCrossEntropyOfUniformIsLogV) {
  Tensor<double> logits({2, 4}, std::vector<double>(8, 0.3));
  std::vector<std::size_t> targets = {1, 3};
  for (double s : {0.0, 0.1, 0.5})
    EXPECT_NEAR(cross_entropy<double>(log_softmax_rows(logits), targets, s).item(), std::log(4.0),
                1e-12);
}

TEST(Autodiff, CrossEntropyIgnoresPaddingRows) {
  Tensor<double> logits({2, 3}, {1, 2, 3, 9, -9, 0});
  const auto lp = log_softmax_rows(logits);
  const double row0 = -lp[2];
  EXPECT_NEAR(cross_entropy<double>(lp, std::vector<std::size_t>{2, 7}, 0.0, 7).item(), row0, 1e-12);
}

TEST(Autodiff, DropoutIsIdentityInExpectationAndZeroAtRateZero) {
  std::mt19937_64 rng(3);
  Tensor<double> a({1000}, std::vector<double>(1000, 1.0));
  const auto same = dropout(a, 0.0, rng);
  for (double v : same.values()) EXPECT_EQ(v, 1.0);
  const auto d = dropout(a, 0.5, rng);
  double total = 0;
  for (double v : d.values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    total += v;
  }
  EXPECT_NEAR(total / 1000.0, 1.0, 0.1);
}

TEST(Optim, OneAdamStepMatchesHandComputation) {
  ParameterSet<double> params;
  auto w = params.add("w", Tensor<double>({2}, {1.0, -1.0}), ParamGroup::decoder);
  w.mutable_grad()[0] = 0.5;
  w.mutable_grad()[1] = -2.0;
  AdamState<double> state;
  adam_step<double>(params, state, 0.1);
  // Bias-corrected moments after one step: m_hat = g, v_hat = g^2.
  for (std::size_t i = 0; i < 2; ++i) {
    const double g = i == 0 ? 0.5 : -2.0;
    const double expected = (i == 0 ? 1.0 : -1.0) - 0.1 * g / (std::sqrt(g * g) + 1e-8);
    EXPECT_NEAR(w[i], expected, 1e-12);
  }
  EXPECT_FALSE(w.has_grad());
}

TEST(Optim, FrozenRowsAndUntrainableParametersStayPut) {
  ParameterSet<double> params;
  auto table = params.add("table", Tensor<double>({3, 2}, {0, 0, 1, 1, 2, 2}), ParamGroup::decoder);
  params.at("table").frozen_rows = {0};
  auto fixed = params.add("fixed", Tensor<double>({1}, {5}), ParamGroup::encoder);
  params.at("fixed").trainable = false;
  for (auto& g : table.mutable_grad()) g = 1.0;
  fixed.mutable_grad()[0] = 1.0;
  AdamState<double> state;
  adam_step<double>(params, state, 0.1);
  EXPECT_EQ(table[0], 0.0);
  EXPECT_EQ(table[1], 0.0);
  EXPECT_LT(table[2], 1.0);
  EXPECT_EQ(fixed[0], 5.0);
}

TEST(Optim, GroupLearningRatesApplySeparately) {
  ParameterSet<double> params;
  auto e = params.add("e", Tensor<double>({1}, {0}), ParamGroup::encoder);
  auto d = params.add("d", Tensor<double>({1}, {0}), ParamGroup::decoder);
  e.mutable_grad()[0] = 1;
  d.mutable_grad()[0] = 1;
  AdamState<double> state;
  adam_step<double>(params, state, [](ParamGroup g) { return g == ParamGroup::encoder ? 0.01 : 0.2; });
  // Step size lr * g / (|g| + 1e-8).
  EXPECT_NEAR(e[0], -0.01, 1e-9);
  EXPECT_NEAR(d[0], -0.2 / (1 + 1e-8), 1e-12);
}

TEST(Optim, ClipScalesToMaxNorm) {
  ParameterSet<double> params;
  auto w = params.add("w", Tensor<double>({2}, {0, 0}), ParamGroup::decoder);
  w.mutable_grad()[0] = 3;
  w.mutable_grad()[1] = 4;
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_NEAR(w.grad()[0], 0.6, 1e-12);
  EXPECT_NEAR(w.grad()[1], 0.8, 1e-12);
}

TEST(Optim, ScheduleValues) {
  const LrSchedule ext{2e-3, 10000};
  EXPECT_NEAR(lr_at(ext, 10000), 2e-5, 1e-12);
  EXPECT_NEAR(lr_at(ext, 40000), 1e-5, 1e-12);
  EXPECT_NEAR(lr_at(LrSchedule{2e-3, 1}, 1), 2e-3, 1e-15);
  EXPECT_THROW(lr_at(ext, 0), Error);
  // Peak at the end of warmup.
  EXPECT_GT(lr_at(ext, 10000), lr_at(ext, 9000));
  EXPECT_GT(lr_at(ext, 10000), lr_at(ext, 11000));
}
