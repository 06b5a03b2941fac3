#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "grw/autodiff/tensor.hpp"

namespace grw::ad {

namespace detail {

template <class Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MatMap = Eigen::Map<RowMat<Real>>;
template <class Real>
using ConstMatMap = Eigen::Map<const RowMat<Real>>;

inline void require(bool ok, const char* op, const Shape& a, const Shape& b) {
  if (!ok)
    throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                     to_string(b));
}

inline void require_matrix(const char* op, const Shape& a) {
  if (a.size() != 2)
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " + to_string(a));
}

template <class Real>
void accumulate(Node<Real>& target, std::span<const Real> delta) {
  Real* g = target.grad_data();
  for (std::size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

}  // namespace detail

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require(a.shape() == b.shape(), "add", a.shape(), b.shape());
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
  auto pa = a.node_ptr(), pb = b.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a, &b}, [pa, pb](Node<Real>& out) {
    if (pa->requires_grad) detail::accumulate<Real>(*pa, out.grad);
    if (pb->requires_grad) detail::accumulate<Real>(*pb, out.grad);
  });
}

// a[m,n] + b[n], b broadcast over rows.
template <class Real>
Tensor<Real> add_row(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require_matrix("add_row", a.shape());
  const std::size_t m = a.rows(), n = a.cols();
  detail::require(b.size() == n, "add_row", a.shape(), b.shape());
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] = a[i * n + j] + b[j];
  auto pa = a.node_ptr(), pb = b.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a, &b}, [pa, pb, m, n](Node<Real>& out) {
    if (pa->requires_grad) detail::accumulate<Real>(*pa, out.grad);
    if (pb->requires_grad) {
      Real* g = pb->grad_data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += out.grad[i * n + j];
    }
  });
}

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require(a.shape() == b.shape(), "mul", a.shape(), b.shape());
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
  auto pa = a.node_ptr(), pb = b.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a, &b}, [pa, pb](Node<Real>& out) {
    const std::size_t n = out.grad.size();
    if (pa->requires_grad) {
      Real* g = pa->grad_data();
      for (std::size_t i = 0; i < n; ++i) g[i] += out.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      Real* g = pb->grad_data();
      for (std::size_t i = 0; i < n; ++i) g[i] += out.grad[i] * pa->value[i];
    }
  });
}

template <class Real>
Tensor<Real> scale(const Tensor<Real>& a, Real s) {
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * s;
  auto pa = a.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a}, [pa, s](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i] * s;
  });
}

// a[m,k] * b[k,n]
template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require_matrix("matmul", a.shape());
  detail::require_matrix("matmul", b.shape());
  detail::require(a.cols() == b.rows(), "matmul", a.shape(), b.shape());
  const auto m = static_cast<Eigen::Index>(a.rows()), k = static_cast<Eigen::Index>(a.cols()),
             n = static_cast<Eigen::Index>(b.cols());
  std::vector<Real> v(static_cast<std::size_t>(m * n));
  detail::MatMap<Real>(v.data(), m, n).noalias() =
      detail::ConstMatMap<Real>(a.values().data(), m, k) *
      detail::ConstMatMap<Real>(b.values().data(), k, n);
  auto pa = a.node_ptr(), pb = b.node_ptr();
  return make_result<Real>(
      {a.rows(), b.cols()}, std::move(v), {&a, &b}, [pa, pb, m, k, n](Node<Real>& out) {
        detail::ConstMatMap<Real> dc(out.grad.data(), m, n);
        if (pa->requires_grad)
          detail::MatMap<Real>(pa->grad_data(), m, k).noalias() +=
              dc * detail::ConstMatMap<Real>(pb->value.data(), k, n).transpose();
        if (pb->requires_grad)
          detail::MatMap<Real>(pb->grad_data(), k, n).noalias() +=
              detail::ConstMatMap<Real>(pa->value.data(), m, k).transpose() * dc;
      });
}

template <class Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  detail::require_matrix("transpose", a.shape());
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) v[j * m + i] = a[i * n + j];
  auto pa = a.node_ptr();
  return make_result<Real>({n, m}, std::move(v), {&a}, [pa, m, n](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += out.grad[j * m + i];
  });
}

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape shape) {
  detail::require(numel(shape) == a.size(), "reshape", a.shape(), shape);
  std::vector<Real> v(a.values().begin(), a.values().end());
  auto pa = a.node_ptr();
  return make_result<Real>(std::move(shape), std::move(v), {&a}, [pa](Node<Real>& out) {
    detail::accumulate<Real>(*pa, out.grad);
  });
}

// Columns [begin, end) of a matrix.
template <class Real>
Tensor<Real> slice_cols(const Tensor<Real>& a, std::size_t begin, std::size_t end) {
  detail::require_matrix("slice_cols", a.shape());
  const std::size_t m = a.rows(), n = a.cols();
  if (begin >= end || end > n)
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") outside shape " + to_string(a.shape()));
  const std::size_t w = end - begin;
  std::vector<Real> v(m * w);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(a.values().begin() + i * n + begin, w, v.begin() + i * w);
  auto pa = a.node_ptr();
  return make_result<Real>({m, w}, std::move(v), {&a}, [pa, m, n, w, begin](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += out.grad[i * w + j];
  });
}

// Rows [begin, end) of a matrix.
template <class Real>
Tensor<Real> slice_rows(const Tensor<Real>& a, std::size_t begin, std::size_t end) {
  detail::require_matrix("slice_rows", a.shape());
  const std::size_t m = a.rows(), n = a.cols();
  if (begin >= end || end > m)
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") outside shape " + to_string(a.shape()));
  std::vector<Real> v(a.values().begin() + begin * n, a.values().begin() + end * n);
  auto pa = a.node_ptr();
  return make_result<Real>({end - begin, n}, std::move(v), {&a}, [pa, n, begin](Node<Real>& out) {
    Real* g = pa->grad_data() + begin * n;
    for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i];
  });
}

template <class Real>
Tensor<Real> concat_cols(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    detail::require_matrix("concat_cols", p.shape());
    detail::require(p.rows() == m, "concat_cols", parts[0].shape(), p.shape());
    total += p.cols();
  }
  std::vector<Real> v(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p.values().begin() + i * w, w, v.begin() + i * total + offset);
    offset += w;
  }
  std::vector<std::shared_ptr<Node<Real>>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node_ptr());
  return make_result_n<Real>({m, total}, std::move(v), parts, [nodes, m, total](Node<Real>& out) {
    std::size_t off = 0;
    for (const auto& p : nodes) {
      const std::size_t w = p->shape[1];
      if (p->requires_grad) {
        Real* g = p->grad_data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += out.grad[i * total + off + j];
      }
      off += w;
    }
  });
}

template <class Real>
Tensor<Real> concat_rows(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    detail::require_matrix("concat_rows", p.shape());
    detail::require(p.cols() == n, "concat_rows", parts[0].shape(), p.shape());
    total += p.rows();
  }
  std::vector<Real> v;
  v.reserve(total * n);
  for (const auto& p : parts) v.insert(v.end(), p.values().begin(), p.values().end());
  std::vector<std::shared_ptr<Node<Real>>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node_ptr());
  return make_result_n<Real>({total, n}, std::move(v), parts, [nodes](Node<Real>& out) {
    std::size_t off = 0;
    for (const auto& p : nodes) {
      const std::size_t count = p->value.size();
      if (p->requires_grad) {
        Real* g = p->grad_data();
        for (std::size_t i = 0; i < count; ++i) g[i] += out.grad[off + i];
      }
      off += count;
    }
  });
}

// Embedding lookup: rows of table[V,d] selected by ids.
template <class Real>
Tensor<Real> gather_rows(const Tensor<Real>& table, std::span<const std::size_t> ids) {
  detail::require_matrix("gather_rows", table.shape());
  const std::size_t rows = table.rows(), d = table.cols();
  std::vector<Real> v(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows)
      throw ShapeError("gather_rows: index " + std::to_string(ids[i]) + " outside table shape " +
                       to_string(table.shape()));
    std::copy_n(table.values().begin() + ids[i] * d, d, v.begin() + i * d);
  }
  auto pt = table.node_ptr();
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return make_result<Real>({idx.size(), d}, std::move(v), {&table},
                           [pt, idx, d](Node<Real>& out) {
                             Real* g = pt->grad_data();
                             for (std::size_t i = 0; i < idx.size(); ++i)
                               for (std::size_t j = 0; j < d; ++j)
                                 g[idx[i] * d + j] += out.grad[i * d + j];
                           });
}

template <class Real>
Tensor<Real> softmax_rows(const Tensor<Real>& a) {
  const std::size_t n = a.rank() == 1 ? a.size() : a.cols();
  const std::size_t m = a.size() / n;
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    const Real* x = a.values().data() + i * n;
    Real* y = v.data() + i * n;
    const Real mx = *std::max_element(x, x + n);
    Real z = 0;
    for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  auto pa = a.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a}, [pa, m, n](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < m; ++i) {
      const Real* y = out.value.data() + i * n;
      const Real* dy = out.grad.data() + i * n;
      Real dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

template <class Real>
Tensor<Real> log_softmax_rows(const Tensor<Real>& a) {
  const std::size_t n = a.rank() == 1 ? a.size() : a.cols();
  const std::size_t m = a.size() / n;
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    const Real* x = a.values().data() + i * n;
    Real* y = v.data() + i * n;
    const Real mx = *std::max_element(x, x + n);
    Real z = 0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
    const Real lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) y[j] = x[j] - lse;
  }
  auto pa = a.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a}, [pa, m, n](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < m; ++i) {
      const Real* y = out.value.data() + i * n;
      const Real* dy = out.grad.data() + i * n;
      Real total = 0;
      for (std::size_t j = 0; j < n; ++j) total += dy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += dy[j] - std::exp(y[j]) * total;
    }
  });
}

// Positions with mask[i] != 0 are overwritten by `fill` and receive no gradient.
template <class Real>
Tensor<Real> masked_fill(const Tensor<Real>& a, std::span<const std::uint8_t> mask, Real fill) {
  if (mask.size() != a.size())
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) +
                     " entries for shape " + to_string(a.shape()));
  std::vector<Real> v(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i]) v[i] = fill;
  auto pa = a.node_ptr();
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return make_result<Real>(a.shape(), std::move(v), {&a}, [pa, m](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!m[i]) g[i] += out.grad[i];
  });
}

// Row-wise layer normalization with population variance.
template <class Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias,
                        Real eps = Real(1e-6)) {
  const std::size_t n = x.rank() == 1 ? x.size() : x.cols();
  const std::size_t m = x.size() / n;
  detail::require(gain.size() == n && bias.size() == n, "layer_norm", x.shape(), gain.shape());
  std::vector<Real> v(x.size()), xhat(x.size()), rstd(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Real* xi = x.values().data() + i * n;
    Real mean = 0;
    for (std::size_t j = 0; j < n; ++j) mean += xi[j];
    mean /= Real(n);
    Real var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= Real(n);
    rstd[i] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (xi[j] - mean) * rstd[i];
      v[i * n + j] = xhat[i * n + j] * gain[j] + bias[j];
    }
  }
  auto px = x.node_ptr(), pg = gain.node_ptr(), pb = bias.node_ptr();
  return make_result<Real>(
      x.shape(), std::move(v), {&x, &gain, &bias},
      [px, pg, pb, m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Node<Real>& out) {
        const Real* dy = out.grad.data();
        if (pg->requires_grad) {
          Real* g = pg->grad_data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[j] += dy[i * n + j] * xhat[i * n + j];
        }
        if (pb->requires_grad) {
          Real* g = pb->grad_data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[j] += dy[i * n + j];
        }
        if (px->requires_grad) {
          Real* g = px->grad_data();
          std::vector<Real> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            Real mean_d = 0, mean_dx = 0;
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = dy[i * n + j] * pg->value[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat[i * n + j];
            }
            mean_d /= Real(n);
            mean_dx /= Real(n);
            for (std::size_t j = 0; j < n; ++j)
              g[i * n + j] += rstd[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx);
          }
        }
      });
}

// Inverted dropout: kept entries are scaled by 1/(1-p) so inference needs no rescale.
template <class Real, class Rng>
Tensor<Real> dropout(const Tensor<Real>& a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  std::vector<Real> keep(a.size(), Real(0));
  if (p < 1.0) {
    std::bernoulli_distribution coin(1.0 - p);
    const Real s = Real(1.0 / (1.0 - p));
    for (auto& k : keep) k = coin(rng) ? s : Real(0);
  }
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * keep[i];
  auto pa = a.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a},
                           [pa, keep = std::move(keep)](Node<Real>& out) {
                             Real* g = pa->grad_data();
                             for (std::size_t i = 0; i < keep.size(); ++i)
                               g[i] += out.grad[i] * keep[i];
                           });
}

template <class Real>
Tensor<Real> relu(const Tensor<Real>& a) {
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] > Real(0) ? a[i] : Real(0);
  auto pa = a.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a}, [pa](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < out.grad.size(); ++i)
      if (pa->value[i] > Real(0)) g[i] += out.grad[i];
  });
}

template <class Real>
Tensor<Real> sigmoid(const Tensor<Real>& a) {
  std::vector<Real> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = Real(1) / (Real(1) + std::exp(-a[i]));
  auto pa = a.node_ptr();
  return make_result<Real>(a.shape(), std::move(v), {&a}, [pa](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < out.grad.size(); ++i)
      g[i] += out.grad[i] * out.value[i] * (Real(1) - out.value[i]);
  });
}

template <class Real>
Tensor<Real> sum(const Tensor<Real>& a) {
  Real total = 0;
  for (Real x : a.values()) total += x;
  auto pa = a.node_ptr();
  return make_result<Real>({1}, {total}, {&a}, [pa](Node<Real>& out) {
    Real* g = pa->grad_data();
    for (std::size_t i = 0; i < pa->value.size(); ++i) g[i] += out.grad[0];
  });
}

template <class Real>
Tensor<Real> mean(const Tensor<Real>& a) {
  return scale(sum(a), Real(1) / Real(a.size()));
}

// Smoothed cross-entropy over log-probabilities logp[m,V]. The target
// distribution puts 1-s on the gold class and s/(V-1) on every other class.
// Rows whose target equals `ignore` contribute nothing; the result is the
// mean over the remaining rows (0 when none remain).
template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logp, std::span<const std::size_t> targets,
                           double smoothing = 0.0,
                           std::size_t ignore = std::numeric_limits<std::size_t>::max()) {
  detail::require_matrix("cross_entropy", logp.shape());
  const std::size_t m = logp.rows(), V = logp.cols();
  if (targets.size() != m)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for shape " +
                     to_string(logp.shape()));
  const Real on = Real(1.0 - smoothing);
  const Real off = V > 1 ? Real(smoothing / double(V - 1)) : Real(0);
  std::size_t counted = 0;
  Real total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] == ignore) continue;
    if (targets[i] >= V)
      throw ShapeError("cross_entropy: target " + std::to_string(targets[i]) +
                       " outside vocabulary of " + std::to_string(V));
    ++counted;
    const Real* row = logp.values().data() + i * V;
    if (off != Real(0)) {
      Real row_sum = 0;
      for (std::size_t j = 0; j < V; ++j) row_sum += row[j];
      total -= off * (row_sum - row[targets[i]]);
    }
    total -= on * row[targets[i]];
  }
  const Real denom = counted ? Real(counted) : Real(1);
  auto pl = logp.node_ptr();
  std::vector<std::size_t> t(targets.begin(), targets.end());
  return make_result<Real>({1}, {total / denom}, {&logp},
                           [pl, t, m, V, on, off, ignore, denom](Node<Real>& out) {
                             Real* g = pl->grad_data();
                             const Real s = out.grad[0] / denom;
                             for (std::size_t i = 0; i < m; ++i) {
                               if (t[i] == ignore) continue;
                               if (off != Real(0))
                                 for (std::size_t j = 0; j < V; ++j) g[i * V + j] -= s * off;
                               g[i * V + t[i]] -= s * (on - off);
                             }
                           });
}

// Mean binary cross-entropy of probabilities against {0,1} labels.
template <class Real>
Tensor<Real> binary_cross_entropy(const Tensor<Real>& probs, std::span<const Real> labels) {
  if (probs.size() != labels.size())
    throw ShapeError("binary_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for shape " + to_string(probs.shape()));
  const Real tiny = std::numeric_limits<Real>::epsilon();
  const std::size_t c = probs.size();
  Real total = 0;
  for (std::size_t i = 0; i < c; ++i) {
    const Real p = std::clamp(probs[i], tiny, Real(1) - tiny);
    total -= labels[i] * std::log(p) + (Real(1) - labels[i]) * std::log(Real(1) - p);
  }
  auto pp = probs.node_ptr();
  std::vector<Real> l(labels.begin(), labels.end());
  return make_result<Real>({1}, {total / Real(c)}, {&probs}, [pp, l, c, tiny](Node<Real>& out) {
    Real* g = pp->grad_data();
    const Real s = out.grad[0] / Real(c);
    for (std::size_t i = 0; i < c; ++i) {
      const Real p = std::clamp(pp->value[i], tiny, Real(1) - tiny);
      g[i] += s * (-l[i] / p + (Real(1) - l[i]) / (Real(1) - p));
    }
  });
}

}  // namespace grw::ad
