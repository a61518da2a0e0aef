#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hgformer/tensor.hpp"

namespace hgformer {

/// Named trainable tensors; std::map keeps iteration sorted by name.
template <class T>
using Params = std::map<std::string, Tensor<T>>;

template <class T>
void zero_grads(Params<T>& params) {
  for (auto& [name, t] : params) t.zero_grad();
}

struct AdamOptions {
  double lr = 0.01;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  AdamOptions options;
  long step = 0;
  std::map<std::string, std::vector<T>> first_moment;
  std::map<std::string, std::vector<T>> second_moment;

  explicit AdamState(AdamOptions opts = {}) : options(opts) {}
};

/// One Adam update with bias correction. Weight decay is decoupled: each
/// weight first shrinks by lr*wd*w, then takes the Adam step. Gradients are
/// cleared afterwards.
template <class T>
void adam_step(Params<T>& params, AdamState<T>& state) {
  for (auto& [name, t] : params)
    if (!t.has_grad())
      throw Error(ErrorKind::MissingGradient, "parameter '" + name + "' has no gradient");

  const auto& o = state.options;
  ++state.step;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (auto& [name, t] : params) {
    auto w = t.mutable_values();
    auto g = t.grad();
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != w.size()) m.assign(w.size(), T(0));
    if (v.size() != w.size()) v.assign(w.size(), T(0));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = T(o.beta1 * m[i] + (1.0 - o.beta1) * gi);
      v[i] = T(o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi);
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      double wi = w[i];
      wi -= o.lr * o.weight_decay * wi;
      wi -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
      w[i] = T(wi);
    }
    t.zero_grad();
  }
}

}  // namespace hgformer
