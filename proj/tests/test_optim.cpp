#include <gtest/gtest.h>

#include <cmath>

#include "hgformer/error.hpp"
#include "hgformer/grad_check.hpp"
#include "hgformer/ops.hpp"
#include "hgformer/optim.hpp"
#include "support.hpp"

using namespace hgformer;
using hgtest::TensorD;

namespace {

TensorD squared_distance(const TensorD& w, double target) {
  auto d = add_scalar(w, -target);
  return sum(mul(d, d));
}

// Plain scalar Adam with decoupled decay, used as the oracle.
struct ScalarAdam {
  double lr, wd, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0, v = 0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    w -= lr * wd * w;
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST(Adam, FirstStepIsLearningRate) {
  Params<double> p{{"w", TensorD::parameter(1, 1, {0.7})}};
  backward(sum(p.at("w")));
  AdamState<double> state(AdamOptions{0.01, 0.0});
  adam_step(p, state);
  EXPECT_NEAR(p.at("w").item(), 0.7 - 0.01, 1e-9);
  EXPECT_EQ(state.step, 1);
  EXPECT_FALSE(p.at("w").has_grad());
}

TEST(Adam, ZeroGradientLeavesWeights) {
  Params<double> p{{"w", TensorD::parameter(1, 3, {1, -2, 3})}};
  AdamState<double> state(AdamOptions{0.01, 0.0});
  for (int i = 0; i < 5; ++i) {
    backward(scale(sum(p.at("w")), 0.0));
    adam_step(p, state);
  }
  EXPECT_EQ(p.at("w")(0, 1), -2.0);
}

TEST(Adam, ZeroLearningRateLeavesWeights) {
  Params<double> p{{"w", TensorD::parameter(1, 2, {1.5, -0.5})}};
  AdamState<double> state(AdamOptions{0.0, 5e-4});
  for (int i = 0; i < 10; ++i) {
    backward(squared_distance(p.at("w"), 3.0));
    adam_step(p, state);
  }
  EXPECT_EQ(p.at("w")(0, 0), 1.5);
  EXPECT_EQ(p.at("w")(0, 1), -0.5);
}

TEST(Adam, MatchesScalarOracleWithDecay) {
  Params<double> p{{"w", TensorD::parameter(1, 1, {0.0})}};
  AdamState<double> state(AdamOptions{0.05, 0.01});
  ScalarAdam oracle{0.05, 0.01};
  double w = 0.0;
  for (int i = 0; i < 50; ++i) {
    backward(squared_distance(p.at("w"), 3.0));
    adam_step(p, state);
    w = oracle.step(w, 2 * (w - 3.0));
    ASSERT_NEAR(p.at("w").item(), w, 1e-12) << "step " << i;
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  // lr 0.1: with lr 0.01 the step size caps progress at roughly 1 in 100 steps.
  Params<double> p{{"w", TensorD::parameter(1, 1, {0.0})}};
  AdamState<double> state(AdamOptions{0.1, 0.0});
  for (int i = 0; i < 100; ++i) {
    backward(squared_distance(p.at("w"), 3.0));
    adam_step(p, state);
  }
  EXPECT_LT(std::abs(p.at("w").item() - 3.0), 0.5);
}

TEST(Adam, MissingGradient) {
  Params<double> p{{"a", TensorD::parameter(1, 1, {1})}, {"b", TensorD::parameter(1, 1, {1})}};
  backward(sum(p.at("a")));
  AdamState<double> state;
  try {
    adam_step(p, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGradient);
  }
  EXPECT_EQ(p.at("a").item(), 1.0);
}

TEST(Adam, UnreachedParameterGetsZeroGradient) {
  Params<double> p{{"a", TensorD::parameter(1, 1, {1})}, {"b", TensorD::parameter(1, 1, {2})}};
  backward(add(sum(p.at("a")), scale(sum(p.at("b")), 0.0)));
  AdamState<double> state(AdamOptions{0.1, 0.0});
  adam_step(p, state);
  EXPECT_EQ(p.at("b").item(), 2.0);
}

TEST(GradCheck, Square) {
  Params<double> p{{"x", TensorD::parameter(1, 1, {3.0})}};
  auto report = grad_check([](Params<double>& q) { return mul(q.at("x"), q.at("x")); }, p);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.worst, 1e-9);
  EXPECT_EQ(p.at("x").grad()[0], 6.0);
}

TEST(GradCheck, Constant) {
  Params<double> p{{"x", TensorD::parameter(1, 2, {3.0, 1.0})}};
  auto report = grad_check(
      [](Params<double>& q) { return add_scalar(scale(sum(q.at("x")), 0.0), 4.0); }, p);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.worst, 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A function whose recorded gradient is deliberately inconsistent: the
  // scale factor differs between the taped and untaped evaluations.
  Params<double> p{{"x", TensorD::parameter(1, 1, {1.0})}};
  auto report = grad_check(
      [](Params<double>& q) { return scale(q.at("x"), grad_enabled() ? 1.0 : 2.0); }, p);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.worst_param, "x");
}
