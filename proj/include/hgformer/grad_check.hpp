#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "hgformer/optim.hpp"

namespace hgformer {

struct GradCheckReport {
  std::map<std::string, double> max_rel_error;  // per parameter
  double worst = 0.0;
  std::string worst_param;
  bool passed = true;
};

/// Compares reverse-mode gradients of `f` against central differences
/// (f(w+h) - f(w-h)) / 2h, entry by entry. Relative error is
/// |a - n| / max(1, |a|, |n|). `f` must be deterministic in the params.
inline GradCheckReport grad_check(const std::function<Tensor<double>(Params<double>&)>& f,
                                  Params<double>& params, double h = 1e-5, double tol = 1e-4) {
  zero_grads(params);
  backward(f(params));

  GradCheckReport report;
  for (auto& [name, t] : params) {
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    analytic.resize(t.size(), 0.0);
    double worst = 0.0;
    auto w = t.mutable_values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      double plus, minus;
      {
        NoGradGuard guard;
        w[i] = saved + h;
        plus = f(params).item();
        w[i] = saved - h;
        minus = f(params).item();
      }
      w[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    report.max_rel_error[name] = worst;
    if (worst >= report.worst) {
      report.worst = worst;
      report.worst_param = name;
    }
  }
  zero_grads(params);
  report.passed = report.worst < tol;
  return report;
}

}  // namespace hgformer
