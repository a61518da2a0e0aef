#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hgformer/tensor.hpp"

namespace hgformer {

namespace detail {

template <class Msg>
void require(bool ok, ErrorKind kind, Msg&& what) {
  if (!ok) [[unlikely]]
    throw Error(kind, what());
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::ShapeMismatch,
          [&] { return std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string(); });
}

// c[n x m] += a[n x k] * b[k x m]
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  constexpr std::size_t kBlock = 16;
  for (std::size_t i = 0; i < n; ++i) {
    T* ci = c + i * m;
    const T* ai = a + i * k;
    std::size_t j0 = 0;
    for (; j0 + kBlock <= m; j0 += kBlock) {
      T acc[kBlock];
      for (std::size_t j = 0; j < kBlock; ++j) acc[j] = ci[j0 + j];
      for (std::size_t p = 0; p < k; ++p) {
        const T aip = ai[p];
        const T* bp = b + p * m + j0;
        for (std::size_t j = 0; j < kBlock; ++j) acc[j] += aip * bp[j];
      }
      for (std::size_t j = 0; j < kBlock; ++j) ci[j0 + j] = acc[j];
    }
    if (j0 == m) continue;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      if (aip == T(0)) continue;
      const T* bp = b + p * m;
      for (std::size_t j = j0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[n x m] += a[n x k] * b[m x k]^T
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  std::vector<T> bt(k * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b[j * k + p];
  gemm_nn(a, bt.data(), c, n, k, m);
}

// c[k x m] += a[n x k]^T * b[n x m]
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  std::vector<T> at(k * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) at[p * n + i] = a[i * k + p];
  gemm_nn(at.data(), b, c, k, n, m);
}

template <class T>
bool wants_grad(const std::shared_ptr<Node<T>>& n) {
  return n && n->requires_grad;
}

}  // namespace detail

/// a[n x k] * b[k x m]
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.cols() == b.rows(), ErrorKind::ShapeMismatch,
                  [&] { return "matmul: " + a.shape_string() + " * " + b.shape_string(); });
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<T> out(n * m, T(0));
  detail::gemm_nn(a.values().data(), b.values().data(), out.data(), n, k, m);
  return Tensor<T>::make_result(
      n, m, std::move(out), {a.node(), b.node()}, [n, k, m](detail::Node<T>& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (detail::wants_grad(pa))
          detail::gemm_nt(self.grad.data(), pb->value.data(), pa->grad_buffer().data(), n, m, k);
        if (detail::wants_grad(pb))
          detail::gemm_tn(pa->value.data(), self.grad.data(), pb->grad_buffer().data(), n, k, m);
      });
}

/// a[n x k] * b[m x k]^T
template <class T>
Tensor<T> matmul_transposed(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.cols() == b.cols(), ErrorKind::ShapeMismatch, [&] {
    return "matmul_transposed: " + a.shape_string() + " * (" + b.shape_string() + ")^T";
  });
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  std::vector<T> out(n * m, T(0));
  detail::gemm_nt(a.values().data(), b.values().data(), out.data(), n, k, m);
  return Tensor<T>::make_result(
      n, m, std::move(out), {a.node(), b.node()}, [n, k, m](detail::Node<T>& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        // dA = G B, dB = G^T A
        if (detail::wants_grad(pa))
          detail::gemm_nn(self.grad.data(), pb->value.data(), pa->grad_buffer().data(), n, m, k);
        if (detail::wants_grad(pb))
          detail::gemm_tn(self.grad.data(), pa->value.data(), pb->grad_buffer().data(), n, m, k);
      });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return Tensor<T>::make_result(a.rows(), a.cols(), std::move(out), {a.node(), b.node()},
                                [](detail::Node<T>& self) {
                                  for (auto& p : self.parents) {
                                    if (!detail::wants_grad(p)) continue;
                                    auto& g = p->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                  }
                                });
}

/// Adds a 1 x m row to every row of a.
template <class T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row) {
  detail::require(row.rows() == 1 && row.cols() == a.cols(), ErrorKind::ShapeMismatch,
                  [&] { return "add_row: " + a.shape_string() + " + " + row.shape_string(); });
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = a.values()[i * m + j] + row.values()[j];
  return Tensor<T>::make_result(n, m, std::move(out), {a.node(), row.node()},
                                [n, m](detail::Node<T>& self) {
                                  if (detail::wants_grad(self.parents[0])) {
                                    auto& g = self.parents[0]->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                  }
                                  if (detail::wants_grad(self.parents[1])) {
                                    auto& g = self.parents[1]->grad_buffer();
                                    for (std::size_t i = 0; i < n; ++i)
                                      for (std::size_t j = 0; j < m; ++j)
                                        g[j] += self.grad[i * m + j];
                                  }
                                });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a.values()[i];
  return Tensor<T>::make_result(a.rows(), a.cols(), std::move(out), {a.node()},
                                [s](detail::Node<T>& self) {
                                  auto& g = self.parents[0]->grad_buffer();
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                    g[i] += s * self.grad[i];
                                });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + s;
  return Tensor<T>::make_result(a.rows(), a.cols(), std::move(out), {a.node()},
                                [](detail::Node<T>& self) {
                                  auto& g = self.parents[0]->grad_buffer();
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                });
}

/// alpha * a + beta * b
template <class T>
Tensor<T> mix(const Tensor<T>& a, const Tensor<T>& b, T alpha, T beta) {
  detail::require_same_shape(a, b, "mix");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = alpha * a.values()[i] + beta * b.values()[i];
  return Tensor<T>::make_result(a.rows(), a.cols(), std::move(out), {a.node(), b.node()},
                                [alpha, beta](detail::Node<T>& self) {
                                  const T coef[2] = {alpha, beta};
                                  for (int k = 0; k < 2; ++k) {
                                    auto& p = self.parents[k];
                                    if (!detail::wants_grad(p)) continue;
                                    auto& g = p->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                      g[i] += coef[k] * self.grad[i];
                                  }
                                });
}

/// Elementwise product.
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return Tensor<T>::make_result(a.rows(), a.cols(), std::move(out), {a.node(), b.node()},
                                [](detail::Node<T>& self) {
                                  auto& pa = self.parents[0];
                                  auto& pb = self.parents[1];
                                  if (detail::wants_grad(pa)) {
                                    auto& g = pa->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                      g[i] += self.grad[i] * pb->value[i];
                                  }
                                  if (detail::wants_grad(pb)) {
                                    auto& g = pb->grad_buffer();
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                      g[i] += self.grad[i] * pa->value[i];
                                  }
                                });
}

/// Sum of all entries as a 1x1 tensor.
template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (T v : a.values()) acc += v;
  return Tensor<T>::make_result(1, 1, {acc}, {a.node()}, [](detail::Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

/// Horizontal concatenation of equal-height tensors.
template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  detail::require(!parts.empty(), ErrorKind::ShapeMismatch,
                  [&] { return "concat_cols: no inputs"; });
  const std::size_t n = parts.front().rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  std::vector<typename Tensor<T>::NodePtr> inputs;
  for (const auto& p : parts) {
    detail::require(p.rows() == n, ErrorKind::ShapeMismatch, [&] {
      return std::string("concat_cols: " + p.shape_string() + " has " + std::to_string(p.rows()) +
                         " rows, expected " + std::to_string(n));
    });
    widths.push_back(p.cols());
    inputs.push_back(p.node());
    total += p.cols();
  }
  std::vector<T> out(n * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(p.values().data() + i * p.cols(), p.cols(), out.data() + i * total + offset);
    offset += p.cols();
  }
  return Tensor<T>::make_result(n, total, std::move(out), std::move(inputs),
                                [n, total, widths](detail::Node<T>& self) {
                                  std::size_t off = 0;
                                  for (std::size_t k = 0; k < widths.size(); ++k) {
                                    auto& p = self.parents[k];
                                    if (detail::wants_grad(p)) {
                                      auto& g = p->grad_buffer();
                                      for (std::size_t i = 0; i < n; ++i)
                                        for (std::size_t j = 0; j < widths[k]; ++j)
                                          g[i * widths[k] + j] += self.grad[i * total + off + j];
                                    }
                                    off += widths[k];
                                  }
                                });
}

/// Row-wise softmax, stabilized by subtracting each row's maximum.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  const std::size_t n = x.rows(), m = x.cols();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x.values().data() + i * m;
    T* oi = out.data() + i * m;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      detail::require(std::isfinite(xi[j]), ErrorKind::NonFiniteInput, [&] {
        return "softmax_rows: entry (" + std::to_string(i) + "," + std::to_string(j) + ")";
      });
      mx = std::max(mx, xi[j]);
    }
    T z = T(0);
    for (std::size_t j = 0; j < m; ++j) z += (oi[j] = std::exp(xi[j] - mx));
    for (std::size_t j = 0; j < m; ++j) oi[j] /= z;
  }
  return Tensor<T>::make_result(n, m, std::move(out), {x.node()}, [n, m](detail::Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      const T* yi = self.value.data() + i * m;
      const T* gi = self.grad.data() + i * m;
      T dot = T(0);
      for (std::size_t j = 0; j < m; ++j) dot += yi[j] * gi[j];
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += yi[j] * (gi[j] - dot);
    }
  });
}

/// Per-row normalization to zero mean / unit (biased) variance, followed by
/// an elementwise affine map.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& shift,
                     T eps = T(1e-5)) {
  const std::size_t n = x.rows(), m = x.cols();
  detail::require(m >= 1, ErrorKind::ShapeMismatch, [&] { return "layer_norm: zero-width input"; });
  detail::require(scale.rows() == 1 && scale.cols() == m && shift.rows() == 1 && shift.cols() == m,
                  ErrorKind::ShapeMismatch, [&] {
                    return std::string("layer_norm: affine params " + scale.shape_string() + "/" +
                                       shift.shape_string() + " for width " + std::to_string(m));
                  });
  std::vector<T> xhat(x.size()), inv_std(n), out(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x.values().data() + i * m;
    T mean = T(0);
    for (std::size_t j = 0; j < m; ++j) mean += xi[j];
    mean /= T(m);
    T var = T(0);
    for (std::size_t j = 0; j < m; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= T(m);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      xhat[i * m + j] = (xi[j] - mean) * inv_std[i];
      out[i * m + j] = xhat[i * m + j] * scale.values()[j] + shift.values()[j];
    }
  }
  return Tensor<T>::make_result(
      n, m, std::move(out), {x.node(), scale.node(), shift.node()},
      [n, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node<T>& self) {
        auto& px = self.parents[0];
        auto& ps = self.parents[1];
        auto& pb = self.parents[2];
        if (detail::wants_grad(ps)) {
          auto& g = ps->grad_buffer();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j] * xhat[i * m + j];
        }
        if (detail::wants_grad(pb)) {
          auto& g = pb->grad_buffer();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
        }
        if (detail::wants_grad(px)) {
          auto& g = px->grad_buffer();
          std::vector<T> dxhat(m);
          for (std::size_t i = 0; i < n; ++i) {
            T sum_d = T(0), sum_dx = T(0);
            for (std::size_t j = 0; j < m; ++j) {
              dxhat[j] = self.grad[i * m + j] * ps->value[j];
              sum_d += dxhat[j];
              sum_dx += dxhat[j] * xhat[i * m + j];
            }
            for (std::size_t j = 0; j < m; ++j)
              g[i * m + j] +=
                  inv_std[i] / T(m) * (T(m) * dxhat[j] - sum_d - xhat[i * m + j] * sum_dx);
          }
        }
      });
}

/// max(x, 0) + slope * min(x, 0) with a single trainable slope (1x1).
template <class T>
Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& slope) {
  detail::require(slope.size() == 1, ErrorKind::ShapeMismatch,
                  [&] { return "prelu: slope must be 1x1, got " + slope.shape_string(); });
  const T a = slope.values()[0];
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.values()[i];
    out[i] = v >= T(0) ? v : a * v;
  }
  return Tensor<T>::make_result(
      x.rows(), x.cols(), std::move(out), {x.node(), slope.node()}, [](detail::Node<T>& self) {
        auto& px = self.parents[0];
        auto& pa = self.parents[1];
        const T a = pa->value[0];
        if (detail::wants_grad(px)) {
          auto& g = px->grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += px->value[i] >= T(0) ? self.grad[i] : a * self.grad[i];
        }
        if (detail::wants_grad(pa)) {
          T acc = T(0);
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (px->value[i] < T(0)) acc += self.grad[i] * px->value[i];
          pa->grad_buffer()[0] += acc;
        }
      });
}

/// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
/// Identity when not training or p == 0 (no draws are taken in that case).
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, Rng& rng) {
  detail::require(p >= 0.0 && p < 1.0, ErrorKind::InvalidProbability,
                  [&] { return "dropout probability " + std::to_string(p) + " outside [0,1)"; });
  if (!training || p == 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - p));
  std::vector<T> mask(x.size());
  for (auto& v : mask) v = uniform01(rng) < p ? T(0) : keep_scale;
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * mask[i];
  return Tensor<T>::make_result(x.rows(), x.cols(), std::move(out), {x.node()},
                                [mask = std::move(mask)](detail::Node<T>& self) {
                                  auto& g = self.parents[0]->grad_buffer();
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                    g[i] += self.grad[i] * mask[i];
                                });
}

/// Mean negative log-softmax of the labelled class over rows selected by mask.
template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                                const std::vector<bool>& mask) {
  const std::size_t n = logits.rows(), c = logits.cols();
  detail::require(labels.size() == n && mask.size() == n, ErrorKind::ShapeMismatch, [&] {
    return std::string("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels / " +
                       std::to_string(mask.size()) + " mask entries for " + std::to_string(n) +
                       " rows");
  });
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++count;
    detail::require(
        labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < c, ErrorKind::LabelOutOfRange, [&] {
          return std::string("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                             " with " + std::to_string(c) + " classes");
        });
  }
  detail::require(count > 0, ErrorKind::EmptyMask,
                  [&] { return "softmax_cross_entropy: mask selects no rows"; });

  std::vector<T> probs(n * c, T(0));
  T total = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const T* li = logits.values().data() + i * c;
    T mx = *std::max_element(li, li + c);
    T z = T(0);
    for (std::size_t j = 0; j < c; ++j) z += (probs[i * c + j] = std::exp(li[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    total += (mx + std::log(z)) - li[labels[i]];
  }
  const T inv_count = T(1) / T(count);
  std::vector<int> lab(labels.begin(), labels.end());
  return Tensor<T>::make_result(1, 1, {total * inv_count}, {logits.node()},
                                [n, c, inv_count, probs = std::move(probs), lab = std::move(lab),
                                 mask](detail::Node<T>& self) {
                                  auto& g = self.parents[0]->grad_buffer();
                                  const T up = self.grad[0] * inv_count;
                                  for (std::size_t i = 0; i < n; ++i) {
                                    if (!mask[i]) continue;
                                    for (std::size_t j = 0; j < c; ++j)
                                      g[i * c + j] += up * probs[i * c + j];
                                    g[i * c + lab[i]] -= up;
                                  }
                                });
}

}  // namespace hgformer
