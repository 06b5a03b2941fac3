#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "grw/autodiff/ops.hpp"

namespace grw::ad {

struct GradCheckResult {
  std::string name;
  std::string shape;
  double relative_error = 0;  // ||analytic - numeric|| / (||analytic|| + ||numeric||)
  double absolute_error = 0;  // ||analytic - numeric||
  bool passed = false;
};

// Compares analytic gradients of a scalar function against central
// differences. `inputs` share storage with whatever `fn` reads, so model
// parameters can be checked in place.
inline GradCheckResult check_gradients(const std::string& name,
                                       std::vector<Tensor<double>> inputs,
                                       const std::function<Tensor<double>()>& fn,
                                       double h = 1e-5, double tol = 1e-4, double abs_tol = 1e-8) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  backward(fn());

  double diff_sq = 0, a_sq = 0, n_sq = 0;
  for (auto& t : inputs) {
    std::vector<double> analytic(t.size(), 0.0);
    if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double plus, minus;
      {
        NoGradGuard guard;
        values[i] = saved + h;
        plus = fn().item();
        values[i] = saved - h;
        minus = fn().item();
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2 * h);
      diff_sq += (analytic[i] - numeric) * (analytic[i] - numeric);
      a_sq += analytic[i] * analytic[i];
      n_sq += numeric * numeric;
    }
    t.zero_grad();
  }
  GradCheckResult r;
  r.name = name;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    r.shape += (i ? " " : "") + to_string(inputs[i].shape());
  const double denom = std::sqrt(a_sq) + std::sqrt(n_sq);
  r.absolute_error = std::sqrt(diff_sq);
  r.relative_error = denom > 0 ? r.absolute_error / denom : 0.0;
  // A gradient that is identically zero (e.g. a key bias, which softmax
  // cancels) leaves only rounding noise, where the ratio means nothing.
  r.passed = std::isfinite(r.relative_error) && (r.relative_error < tol || r.absolute_error < abs_tol);
  return r;
}

namespace detail {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor<double>(std::move(shape), std::move(v));
}

// Weighted sum so every output entry gets a distinct upstream gradient.
inline Tensor<double> probe(const Tensor<double>& y, const Tensor<double>& weights) {
  return sum(mul(reshape(y, {y.size()}), weights));
}

}  // namespace detail

// Runs every primitive over `rounds` random shapes each.
inline std::vector<GradCheckResult> check_primitives(std::uint64_t seed, std::size_t rounds = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::vector<GradCheckResult> out;
  using detail::probe;
  using detail::random_tensor;
  auto weights_for = [&](std::size_t n) { return random_tensor({n}, rng); };

  for (std::size_t r = 0; r < rounds; ++r) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng) + 1;
    auto a = random_tensor({m, n}, rng), b = random_tensor({m, n}, rng);
    auto w = weights_for(m * n);

    out.push_back(check_gradients("add", {a, b}, [&] { return probe(add(a, b), w); }));
    auto row = random_tensor({n}, rng);
    out.push_back(check_gradients("add_row", {a, row}, [&] { return probe(add_row(a, row), w); }));
    out.push_back(check_gradients("mul", {a, b}, [&] { return probe(mul(a, b), w); }));
    out.push_back(check_gradients("scale", {a}, [&] { return probe(scale(a, 0.37), w); }));

    auto lhs = random_tensor({m, k}, rng), rhs = random_tensor({k, n}, rng);
    out.push_back(check_gradients("matmul", {lhs, rhs}, [&] { return probe(matmul(lhs, rhs), w); }));
    out.push_back(check_gradients("transpose", {a}, [&] { return probe(transpose(a), w); }));
    out.push_back(check_gradients("reshape", {a}, [&] { return probe(reshape(a, {n, m}), w); }));

    const std::size_t c0 = r % n, c1 = n;
    auto ws = weights_for(m * (c1 - c0));
    out.push_back(
        check_gradients("slice_cols", {a}, [&] { return probe(slice_cols(a, c0, c1), ws); }));
    const std::size_t r0 = r % m;
    auto wr = weights_for((m - r0) * n);
    out.push_back(
        check_gradients("slice_rows", {a}, [&] { return probe(slice_rows(a, r0, m), wr); }));
    auto c = random_tensor({m, k}, rng);
    auto wc = weights_for(m * (n + k));
    out.push_back(check_gradients("concat_cols", {a, c}, [&] {
      return probe(concat_cols(std::vector<Tensor<double>>{a, c}), wc);
    }));
    auto d = random_tensor({k, n}, rng);
    auto wrr = weights_for((m + k) * n);
    out.push_back(check_gradients("concat_rows", {a, d}, [&] {
      return probe(concat_rows(std::vector<Tensor<double>>{a, d}), wrr);
    }));

    auto table = random_tensor({k + 1, n}, rng);
    std::vector<std::size_t> ids(m);
    for (std::size_t i = 0; i < m; ++i) ids[i] = (i * 7 + r) % (k + 1);
    out.push_back(check_gradients("gather_rows", {table},
                                  [&] { return probe(gather_rows<double>(table, ids), w); }));

    auto logits = random_tensor({m, n}, rng, -3, 3);
    out.push_back(
        check_gradients("softmax", {logits}, [&] { return probe(softmax_rows(logits), w); }));
    out.push_back(check_gradients("log_softmax", {logits},
                                  [&] { return probe(log_softmax_rows(logits), w); }));

    std::vector<std::uint8_t> mask(m * n);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (i * 3 + r) % 4 == 0;
    out.push_back(check_gradients("masked_fill", {a}, [&] {
      return probe(masked_fill<double>(a, mask, -2.5), w);
    }));
    out.push_back(check_gradients("masked_fill_softmax", {logits}, [&] {
      std::vector<std::uint8_t> causal(m * n, 0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < n; ++j) causal[i * n + j] = 1;
      return probe(
          softmax_rows(masked_fill<double>(logits, causal, -std::numeric_limits<double>::infinity())),
          w);
    }));

    auto gain = random_tensor({n}, rng, 0.5, 1.5), bias = random_tensor({n}, rng);
    auto x = random_tensor({m, n}, rng, -2, 2);
    out.push_back(check_gradients("layer_norm", {x, gain, bias},
                                  [&] { return probe(layer_norm(x, gain, bias), w); }));

    const std::uint64_t drop_seed = rng();
    out.push_back(check_gradients("dropout", {a}, [&] {
      std::mt19937_64 local(drop_seed);
      return probe(dropout(a, 0.3, local), w);
    }));
    out.push_back(check_gradients("relu", {a}, [&] { return probe(relu(a), w); }));
    out.push_back(check_gradients("sigmoid", {a}, [&] { return probe(sigmoid(a), w); }));
    out.push_back(check_gradients("sum", {a}, [&] { return sum(a); }));

    std::vector<std::size_t> targets(m);
    for (std::size_t i = 0; i < m; ++i) targets[i] = (i + r) % n;
    if (m > 1) targets[0] = n;  // ignored row
    out.push_back(check_gradients("cross_entropy", {logits}, [&] {
      return cross_entropy<double>(log_softmax_rows(logits), targets, 0.1, n);
    }));
    auto p = random_tensor({m}, rng, 0.05, 0.95);
    std::vector<double> labels(m);
    for (std::size_t i = 0; i < m; ++i) labels[i] = double((i + r) % 2);
    out.push_back(check_gradients("binary_cross_entropy", {p},
                                  [&] { return binary_cross_entropy<double>(p, labels); }));
  }
  return out;
}

}  // namespace grw::ad
