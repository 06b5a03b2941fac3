#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "grw/autodiff/tensor.hpp"

namespace grw::ad {

// Which learning rate a parameter follows (encoder/decoder dual schedule).
enum class ParamGroup { encoder, decoder };

template <class Real>
struct Parameter {
  std::string name;
  Tensor<Real> tensor;
  ParamGroup group = ParamGroup::decoder;
  bool trainable = true;
  std::vector<std::size_t> frozen_rows;  // rows whose gradient is always discarded
};

// Ordered, named collection of the tensors a model owns.
template <class Real>
class ParameterSet {
 public:
  Tensor<Real> add(std::string name, Tensor<Real> t, ParamGroup group) {
    for (const auto& p : params_)
      if (p.name == name) throw Error("duplicate parameter name " + name);
    t.set_requires_grad(true);
    params_.push_back({std::move(name), t, group, true, {}});
    return t;
  }

  std::vector<Parameter<Real>>& items() { return params_; }
  const std::vector<Parameter<Real>>& items() const { return params_; }

  Parameter<Real>& at(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return p;
    throw Error("no parameter named " + name);
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

 private:
  std::vector<Parameter<Real>> params_;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class Real>
struct AdamState {
  AdamOptions options;
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;
  std::size_t step = 0;
};

// Bias-corrected Adam update in place; clears gradients afterwards.
template <class Real>
void adam_step(ParameterSet<Real>& params, AdamState<Real>& state,
               const std::function<double(ParamGroup)>& lr_for) {
  auto& items = params.items();
  if (state.first_moment.empty()) {
    for (const auto& p : items) {
      state.first_moment.emplace_back(p.tensor.size(), Real(0));
      state.second_moment.emplace_back(p.tensor.size(), Real(0));
    }
  }
  if (state.first_moment.size() != items.size())
    throw Error("adam state built for a different parameter set");
  for (const auto& p : items)
    if (p.trainable && !p.tensor.has_grad()) throw Error("adam_step: no gradient for " + p.name);

  ++state.step;
  const auto& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, double(state.step));
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto& p = items[k];
    if (!p.trainable) {
      p.tensor.zero_grad();
      continue;
    }
    auto g = p.tensor.mutable_grad();
    const std::size_t width = p.tensor.rank() == 2 ? p.tensor.cols() : p.tensor.size();
    for (std::size_t r : p.frozen_rows)
      std::fill_n(g.begin() + r * width, width, Real(0));
    auto w = p.tensor.mutable_values();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    const double lr = lr_for(p.group);
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = Real(o.beta1 * m[i] + (1.0 - o.beta1) * g[i]);
      v[i] = Real(o.beta2 * v[i] + (1.0 - o.beta2) * double(g[i]) * g[i]);
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      w[i] -= Real(lr * mhat / (std::sqrt(vhat) + o.eps));
    }
    p.tensor.zero_grad();
  }
}

template <class Real>
void adam_step(ParameterSet<Real>& params, AdamState<Real>& state, double lr) {
  adam_step<Real>(params, state, [lr](ParamGroup) { return lr; });
}

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <class Real>
double clip_grad_norm(ParameterSet<Real>& params, double max_norm) {
  double sq = 0;
  for (auto& p : params.items())
    if (p.trainable && p.tensor.has_grad())
      for (Real g : p.tensor.grad()) sq += double(g) * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const Real s = Real(max_norm / norm);
    for (auto& p : params.items())
      if (p.tensor.has_grad())
        for (Real& g : p.tensor.mutable_grad()) g *= s;
  }
  return norm;
}

// Inverse-square-root schedule with linear warmup:
//   lr = base * min(step^-0.5, step * warmup^-1.5)
struct LrSchedule {
  double base = 2e-3;
  double warmup = 10000;

  double at(std::size_t step) const {
    if (step == 0) throw Error("learning rate schedule is defined from step 1");
    if (!(base > 0) || warmup < 1) throw Error("invalid learning rate schedule");
    const double s = double(step);
    return base * std::min(std::pow(s, -0.5), s * std::pow(warmup, -1.5));
  }
};

inline double lr_at(const LrSchedule& schedule, std::size_t step) { return schedule.at(step); }

}  // namespace grw::ad
