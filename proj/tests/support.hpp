#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "hgformer/hypergraph.hpp"
#include "hgformer/matrix.hpp"
#include "hgformer/model.hpp"
#include "hgformer/tensor.hpp"

namespace hgtest {

using hgformer::Hypergraph;
using hgformer::Matrix;
using hgformer::NodeId;

// Random hypergraph with n nodes and m edges. With `cover`, every node is
// placed in at least one edge before the random fill.
inline Hypergraph random_hypergraph(std::mt19937_64& rng, std::size_t n, std::size_t m, bool weighted,
                                    bool cover) {
  std::vector<std::vector<NodeId>> edges(m);
  std::uniform_int_distribution<std::size_t> pick_edge(0, m - 1);
  std::bernoulli_distribution join(0.3);
  if (cover)
    for (NodeId v = 0; v < n; ++v) edges[pick_edge(rng)].push_back(v);
  for (auto& e : edges) {
    for (NodeId v = 0; v < n; ++v)
      if (join(rng) && std::find(e.begin(), e.end(), v) == e.end()) e.push_back(v);
    std::uniform_int_distribution<NodeId> pick_node(0, static_cast<NodeId>(n - 1));
    while (e.size() < 2) {
      const NodeId v = pick_node(rng);
      if (std::find(e.begin(), e.end(), v) == e.end()) e.push_back(v);
    }
  }
  std::vector<double> w(m, 1.0);
  if (weighted) {
    std::uniform_real_distribution<double> wd(0.1, 3.0);
    for (auto& x : w) x = wd(rng);
  }
  return Hypergraph::from_edge_list(std::move(edges), n, w);
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += (long double)a(i, p) * b(p, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Dense chain D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}, built from the incidence
// matrix only.
inline Matrix dense_laplacian(const Matrix& h, const std::vector<double>& w) {
  const std::size_t n = h.rows(), m = h.cols();
  Matrix left(n, m);
  for (std::size_t v = 0; v < n; ++v) {
    double dv = 0;
    for (std::size_t e = 0; e < m; ++e) dv += w[e] * h(v, e);
    const double s = dv > 0 ? 1.0 / std::sqrt(dv) : 0.0;
    for (std::size_t e = 0; e < m; ++e) left(v, e) = s * h(v, e);
  }
  Matrix mid(m, m);
  for (std::size_t e = 0; e < m; ++e) {
    double de = 0;
    for (std::size_t v = 0; v < n; ++v) de += h(v, e);
    mid(e, e) = w[e] / de;
  }
  return naive_matmul(naive_matmul(left, mid), transpose(left));
}

using TensorD = hgformer::Tensor<double>;

inline TensorD param_from(const Matrix& m) {
  return TensorD::parameter(m.rows(), m.cols(), m.data());
}

// Central-difference gradient of loss() with respect to every entry of x.
inline std::vector<double> numeric_grad(TensorD& x, const std::function<double()>& loss,
                                        double h = 1e-6) {
  hgformer::NoGradGuard guard;
  std::vector<double> g(x.size());
  auto v = x.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = loss();
    v[i] = keep - h;
    const double down = loss();
    v[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// N=6, c=4, d_h=8, 2 layers, 2 heads, gamma=0.5, d_k=d_q=4, 3 classes.
struct TinyFixture {
  Hypergraph hg = Hypergraph::from_edge_list({{0, 1, 2}, {2, 3}, {3, 4, 5}, {0, 5}}, 6);
  Matrix x;
  std::vector<int> labels{0, 0, 1, 1, 2, 2};
  hgformer::ModelConfig cfg;

  explicit TinyFixture(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed + 1000);
    x = random_matrix(rng, 6, 4);
    cfg.gamma = 0.5;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.d_h = 8;
    cfg.d_k = 4;
    cfg.d_q = 4;
    cfg.num_classes = 3;
    cfg.feature_dim = 4;
    cfg.seed = seed;
  }
};

}  // namespace hgtest
