#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "deal/envelopes.hpp"
#include "deal/errors.hpp"
#include "deal/oracles.hpp"
#include "deal/problems.hpp"
#include "deal/rng.hpp"
#include "test_objectives.hpp"

using namespace deal;
using deal::testing::vec;

namespace {

CompositeObjective scalar_lasso(double lambda = 1.0) {
  return to_composite(make_lasso(Matrix::Identity(1, 1), vec({0.0}), lambda));
}

}  // namespace

TEST(ProxL1, SoftThreshold) {
  EXPECT_EQ(prox_l1(vec({3.0, -0.5, 0.0}), 1.0), vec({2.0, 0.0, 0.0}));
  const Vector x = vec({3.0, -0.5, 0.0});
  EXPECT_LE((prox_l1(x, 1e-12) - x).norm(), 2e-12);
  EXPECT_THROW(prox_l1(x, 0.0), UsageError);
}

// Search-based prox points are resolved to about sqrt(eps) at smooth minima.
constexpr double kSearchTol = 1e-7;

TEST(ProxL1, MatchesScalarOracle) {
  auto r = oracle::scalar_minimize([](double t) { return std::abs(t) + 0.5 * (2 - t) * (2 - t); }, -10, 10);
  EXPECT_NEAR(prox_l1(vec({2.0}), 1.0)(0), r.argmin, kSearchTol);
}

TEST(ProxHome, AbsP2MatchesSoftThreshold) {
  auto r = prox_home_separable([](double t) { return std::abs(t); }, vec({2.0}), 1.0, 2.0);
  EXPECT_NEAR(r.point(0), 1.0, kSearchTol);
  EXPECT_FALSE(r.multi_valued);
}

TEST(ProxHome, IndicatorOfOrigin) {
  auto ind = [](double t) { return t == 0.0 ? 0.0 : std::numeric_limits<double>::infinity(); };
  for (double x : {-3.0, 0.2, 7.5}) {
    auto r = prox_home_separable(ind, vec({x}), 1.0, 4.0);
    EXPECT_EQ(r.point(0), 0.0);
  }
}

TEST(ProxHome, QuarticAgainstDenseGrid) {
  auto r = prox_home_separable([](double t) { return std::pow(t, 4); }, vec({1.0}), 0.5, 2.0);
  auto h = [](double t) { return std::pow(t, 4) + (1 - t) * (1 - t); };
  double best = 0.0, best_v = h(0.0);
  for (double t = 0.0; t <= 1.0; t += 1e-5) {
    if (h(t) < best_v) best_v = h(t), best = t;
  }
  EXPECT_NEAR(r.point(0), best, 1e-5);
  EXPECT_NEAR(h(r.point(0)), best_v, 1e-6);
}

TEST(ProxHome, DetectsTies) {
  auto r = prox_home_separable([](double t) { return -std::abs(t); }, vec({0.0}), 1.0, 2.0);
  EXPECT_TRUE(r.multi_valued);
  EXPECT_NEAR(std::abs(r.point(0)), 1.0, 1e-8);
}

TEST(ProxHome, Errors) {
  auto abs = [](double t) { return std::abs(t); };
  EXPECT_THROW(prox_home_separable(abs, vec({1.0, 2.0}), 1.0, 3.0), CapabilityError);
  EXPECT_THROW(prox_home_separable(abs, vec({1.0}), 0.0, 2.0), UsageError);
  EXPECT_THROW(prox_home_separable(abs, vec({1.0}), 1.0, 1.0), UsageError);
  EXPECT_THROW(prox_home_separable([](double t) { return -t * t * t * t; }, vec({1.0}), 1.0, 2.0), DomainError);
}

TEST(Home, HuberEnvelope) {
  const auto g = l1_norm(1.0);
  auto e = home_value_grad(g, vec({2.0}), 1.0, 2.0);
  EXPECT_NEAR(e.value, 1.5, 1e-15);
  EXPECT_NEAR((*e.gradient)(0), 1.0, 1e-15);
  e = home_value_grad(g, vec({0.5}), 1.0, 2.0);
  EXPECT_NEAR(e.value, 0.125, 1e-15);
  EXPECT_NEAR((*e.gradient)(0), 0.5, 1e-15);
}

TEST(Home, HalfSquareEnvelope) {
  const auto g = separable_function([](double t) { return 0.5 * t * t; }, "half_square");
  auto e = home_value_grad(g, vec({2.0}), 1.0, 2.0);
  EXPECT_NEAR(e.prox_point(0), 1.0, kSearchTol);
  EXPECT_NEAR(e.value, 1.0, 1e-12);
  EXPECT_NEAR((*e.gradient)(0), 1.0, kSearchTol);
}

TEST(Home, MultiValuedRefusesGradient) {
  const auto g = separable_function([](double t) { return -std::abs(t); }, "neg_abs");
  auto e = home_value_grad(g, vec({0.0}), 1.0, 2.0);
  EXPECT_TRUE(e.multi_valued);
  EXPECT_FALSE(e.gradient.has_value());
  EXPECT_TRUE(std::isfinite(e.value));
  EXPECT_THROW(home_objective(g, 1.0, 2.0, 1).gradient(vec({0.0})), NumericalError);
}

TEST(Home, NeverExceedsFunction) {
  Rng rng(4);
  const auto g = separable_function([](double t) { return std::pow(std::abs(t), 4.0); }, "pow4");
  for (int i = 0; i < 200; ++i) {
    const Vector x = rng.uniform_vector(1, -5, 5);
    for (double p : {1.5, 2.0, 4.0}) {
      EXPECT_LE(home_value_grad(g, x, 0.7, p).value, g.value(x) + 1e-12);
    }
  }
}

TEST(ForwardBackward, ScalarLasso) {
  const auto lasso = scalar_lasso();
  EXPECT_NEAR(forward_backward_map(lasso, vec({3.0}), 0.5)(0), 1.0, 1e-15);
  EXPECT_THROW(forward_backward_map(lasso, vec({3.0}), 1.0), UsageError);
  EXPECT_THROW(forward_backward_map(lasso, vec({3.0}), 0.0), UsageError);
}

TEST(ForwardBackward, FixedPoint) {
  const auto lasso = scalar_lasso();
  EXPECT_EQ(forward_backward_map(lasso, vec({0.0}), 0.5)(0), 0.0);
}

TEST(ForwardBackward, ZeroFunctionGivesGradientStep) {
  auto gen = generate_problem(2, ProblemKind::quadratic, 8, 4);
  CompositeObjective comp;
  comp.smooth = to_objective(std::get<QuadraticProblem>(gen.problem));
  comp.nonsmooth = zero_function();
  const double gamma = 0.5 / comp.lipschitz();
  const Vector x = default_start(4, 2);
  EXPECT_LE((forward_backward_map(comp, x, gamma) - (x - gamma * comp.smooth.gradient(x))).norm(), 1e-14);
}

TEST(Fbe, ScalarLassoHandArithmetic) {
  const auto lasso = scalar_lasso();
  auto e = fbe_value_grad(lasso, vec({3.0}), 0.5);
  EXPECT_NEAR(e.prox_point(0), 1.0, 1e-15);
  EXPECT_NEAR(e.value, 3.5, 1e-14);
  EXPECT_NEAR((*e.gradient)(0), 2.0, 1e-14);
  EXPECT_NEAR(fbe_value(lasso, vec({1.0}), 0.5), 0.5, 1e-14);
}

TEST(Fbe, FixedPointEqualsObjective) {
  const auto lasso = scalar_lasso();
  auto e = fbe_value_grad(lasso, vec({0.0}), 0.5);
  EXPECT_EQ(e.value, lasso.value(vec({0.0})));
  EXPECT_EQ(e.gradient->norm(), 0.0);
}

TEST(Fbe, DescentInequalityHandCheck) {
  const auto lasso = scalar_lasso();
  const double gamma = 0.5, L = 1.0;
  const Vector x = vec({3.0});
  const Vector T = forward_backward_map(lasso, x, gamma);
  const double rhs = fbe_value(lasso, x, gamma) - (1 - gamma * L) / (2 * gamma) * (x - T).squaredNorm();
  EXPECT_NEAR(rhs, 1.5, 1e-14);
  EXPECT_LE(fbe_value(lasso, T, gamma), lasso.value(T));
  EXPECT_LE(lasso.value(T), rhs + 1e-14);
}

TEST(Fbe, NeedsHessian) {
  auto lasso = scalar_lasso();
  lasso.smooth.hessian_apply = nullptr;
  EXPECT_THROW(fbe_value_grad(lasso, vec({3.0}), 0.5), CapabilityError);
  EXPECT_NO_THROW(fbe_value(lasso, vec({3.0}), 0.5));
}

TEST(Properties, HomeGradientMatchesFiniteDifferences) {
  Rng rng(31);
  const auto pow4 = separable_function([](double t) { return std::pow(std::abs(t), 4.0); }, "pow4");
  const auto l1 = l1_norm(0.7);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Vector x1 = rng.uniform_vector(1, -3, 3);
    const Vector x3 = rng.uniform_vector(3, -3, 3);
    struct Case {
      const ProxCapable* g;
      Vector x;
      double p;
    };
    for (const Case& c : {Case{&pow4, x1, 4.0}, Case{&pow4, x1, 1.5}, Case{&l1, x3, 2.0}, Case{&pow4, x3, 2.0}}) {
      auto e = home_value_grad(*c.g, c.x, 0.8, c.p);
      if (e.multi_valued) continue;
      auto fd = oracle::finite_diff_gradient([&](const Vector& y) { return home_value_grad(*c.g, y, 0.8, c.p).value; },
                                             c.x);
      if (fd.skipped()) continue;
      EXPECT_LE(deal::testing::rel_err(fd.gradient, *e.gradient), 1e-4) << c.g->name << " p " << c.p;
      ++checked;
    }
  }
  EXPECT_GT(checked, 350);
}

TEST(Properties, FbeGradientMatchesFiniteDifferences) {
  auto gen = generate_problem(3, ProblemKind::lasso, 100, 10, {.lambda = 0.1});
  const auto comp = to_composite(std::get<LassoProblem>(gen.problem));
  const double gamma = 0.95 / comp.lipschitz();
  int checked = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Vector x = default_start(10, 500 + i);
    auto e = fbe_value_grad(comp, x, gamma);
    auto fd = oracle::finite_diff_gradient([&](const Vector& y) { return fbe_value(comp, y, gamma); }, x);
    if (fd.skipped()) continue;
    EXPECT_LE(deal::testing::rel_err(fd.gradient, *e.gradient), 1e-4);
    ++checked;
  }
  EXPECT_GT(checked, 90);
}

TEST(Properties, FbeSandwichAndGradientBound) {
  auto gen = generate_problem(8, ProblemKind::lasso, 200, 10, {.lambda = 0.1});
  const auto comp = to_composite(std::get<LassoProblem>(gen.problem));
  const double L = comp.lipschitz();
  for (double gamma : {0.1 / L, 0.5 / L, 0.95 / L}) {
    for (std::uint64_t i = 0; i < 200; ++i) {
      const Vector x = default_start(10, i);
      auto e = fbe_value_grad(comp, x, gamma);
      const Vector& T = e.prox_point;
      const double r2 = (x - T).squaredNorm();
      const double tol = 1e-10 * std::max(1.0, std::abs(e.value));
      EXPECT_LE(fbe_value(comp, T, gamma), comp.value(T) + tol);
      EXPECT_LE(comp.value(T), e.value - (1 - gamma * L) / (2 * gamma) * r2 + tol);
      EXPECT_LE(e.gradient->norm(), (1 + gamma * L) / gamma * std::sqrt(r2) * (1 + 1e-12) + 1e-12);
    }
  }
}

TEST(Properties, EnvelopeKeepsOptimalValue) {
  const auto g = separable_function([](double t) { return std::pow(std::abs(t), 4.0); }, "pow4");
  Rng rng(6);
  for (double p : {1.5, 2.0, 4.0}) {
    EXPECT_NEAR(home_value_grad(g, vec({0.0}), 1.0, p).value, 0.0, 1e-14);
    for (int i = 0; i < 200; ++i) {
      EXPECT_GE(home_value_grad(g, rng.uniform_vector(1, -5, 5), 1.0, p).value, 0.0);
    }
  }
}
