#include <gtest/gtest.h>

#include <cmath>

#include "deal/certificates.hpp"
#include "deal/errors.hpp"
#include "deal/problems.hpp"
#include "deal/rng.hpp"
#include "deal/solvers.hpp"
#include "test_objectives.hpp"

using namespace deal;
using deal::testing::half_square;
using deal::testing::vec;

TEST(DealcStep, FormulaArithmetic) {
  EXPECT_DOUBLE_EQ(dealc_step_size(1, 1, 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(dealc_step_size(1, 1, 0.5, 1), 1.0);
  EXPECT_NEAR(dealc_step_size(0.5, 2, 0.5, 3), std::pow(0.5 / (std::pow(2.0, 1.5) * 3.0), 2.0), 1e-15);
  EXPECT_THROW(dealc_step_size(1, 1, 0.0, 1), UsageError);
  EXPECT_THROW(dealc_step_size(1, 1, 1, -1), UsageError);
}

TEST(DealcStep, InsideAdmissibleInterval) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double c1 = rng.uniform(0.1, 1), c2 = c1 + rng.uniform(0, 2), nu = rng.uniform(0.05, 1),
                 L = rng.uniform(0.1, 10);
    const double a = dealc_step_size(c1, c2, nu, L);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(std::pow(a, nu), c1 * (1 + nu) / (std::pow(c2, 1 + nu) * L));
  }
}

TEST(RunDealc, OneStepOnHalfSquare) {
  DealConfig cfg;
  auto t = run_dealc(half_square(1), vec({5.0}), cfg);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.records[1].f, 0.0);
  EXPECT_EQ(t.termination, "tolerance");
  EXPECT_DOUBLE_EQ(t.rho, 0.5);
  EXPECT_DOUBLE_EQ(t.theta, 2.0);
  EXPECT_TRUE(certify_descent(t, 0.5, 2.0).passed);
  EXPECT_FALSE(t.heuristic);
}

TEST(RunDealc, AnyStartMinimizesInOneStep) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    auto t = run_dealc(half_square(4), rng.uniform_vector(4, -5, 5), DealConfig{});
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.x_final->norm(), 0.0);
  }
}

TEST(RunDealc, HalvedStepIsGeometric) {
  DealConfig cfg;
  cfg.alpha_override = 0.5;
  cfg.max_iter = 30;
  auto t = run_dealc(half_square(1), vec({1.0}), cfg);
  EXPECT_TRUE(t.heuristic);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    EXPECT_NEAR(t.records[i + 1].f / t.records[i].f, 0.25, 1e-14);
  }
  EXPECT_TRUE(certify_descent(t, t.rho, t.theta).passed);
}

TEST(RunDealc, LeastPConsistentCertificates) {
  auto gen = generate_problem(13, ProblemKind::leastp, 100, 30, {.p = 1.5, .consistent = true});
  const auto obj = to_objective(std::get<LeastPProblem>(gen.problem));
  DealConfig cfg;
  cfg.store_iterates = true;
  auto t = run_dealc(obj, default_start(30, 1), cfg);
  auto re = reevaluate(t, obj);
  EXPECT_TRUE(certify_descent(re, t.rho, t.theta).passed);
  ASSERT_TRUE(t.displacement_c.has_value());
  EXPECT_DOUBLE_EQ(*t.displacement_c, t.params.at("alpha"));
  EXPECT_TRUE(certify_displacement(re, *t.displacement_c, t.theta).passed);
}

TEST(RunDealc, RequiresHolderConstants) {
  auto f = half_square(1);
  f.holder.reset();
  EXPECT_THROW(run_dealc(f, vec({1.0}), DealConfig{}), CapabilityError);
}

TEST(RunDealc, NonFiniteStartIsNumericalError) {
  auto f = half_square(1);
  f.value = [](const Vector&) { return std::nan(""); };
  EXPECT_THROW(run_dealc(f, vec({1.0}), DealConfig{}), NumericalError);
}

TEST(RunDealc, NonFiniteStepTerminatesWithRecord) {
  auto f = half_square(1);
  f.value = [](const Vector& x) { return x(0) < 0.9 ? std::nan("") : 0.5 * x(0) * x(0); };
  DealConfig cfg;
  cfg.alpha_override = 0.05;
  auto t = run_dealc(f, vec({1.0}), cfg);
  EXPECT_EQ(t.termination, "nonfinite");
  EXPECT_GE(t.size(), 1u);
}

TEST(DealConfig, Validation) {
  DealConfig cfg;
  cfg.eps = 0.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = {};
  cfg.armijo.sigma = 1.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = {};
  cfg.armijo.eta = 0.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = {};
  cfg.armijo.alpha_bar = -1.0;
  EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(ArmijoBound, FormulaArithmetic) {
  auto b = armijo_bound(1, 0.5, 0.5, 1, 1, 1, 1);
  EXPECT_DOUBLE_EQ(b.c_bar, 1.0);
  EXPECT_DOUBLE_EQ(b.p_bar, 1.0);
  EXPECT_DOUBLE_EQ(b.alpha_tilde, 0.5);
}

TEST(ArmijoBound, SmallSigmaLimit) {
  auto b = armijo_bound(1, 1e-15, 0.5, 1, 1, 1, 1);
  EXPECT_NEAR(b.c_bar, 2.0, 1e-12);
  EXPECT_NEAR(b.p_bar, 0.0, 1e-12);
  EXPECT_NEAR(b.alpha_tilde, 1.0, 1e-12);
}

TEST(ArmijoBound, NegativePBarWhenCBarExceedsOne) {
  auto b = armijo_bound(1, 0.1, 0.5, 1, 1, 0.1, 1);
  EXPECT_LT(b.p_bar, 0.0);
  EXPECT_GT(b.alpha_tilde, 0.0);
}

TEST(RunDeala, HalfSquareAcceptsFirstTrial) {
  DealConfig cfg;
  cfg.armijo.sigma = 0.5;
  auto t = run_deala(half_square(1), vec({1.0}), cfg);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.records[0].inner_count, 0);
  EXPECT_EQ(t.x_final->norm(), 0.0);
  EXPECT_LE(t.records[0].inner_count, t.params.at("p_bar"));
}

TEST(RunDeala, LeastPBacktracksWithinBound) {
  for (double p : {1.5, 2.0}) {
    auto gen = generate_problem(17, ProblemKind::leastp, 120, 40, {.p = p, .consistent = true});
    const auto obj = to_objective(std::get<LeastPProblem>(gen.problem));
    DealConfig cfg;
    cfg.armijo.sigma = 0.5;
    auto t = run_deala(obj, default_start(40, 2), cfg);
    const double p_bar = t.params.at("p_bar"), alpha_tilde = t.params.at("alpha_tilde");
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      EXPECT_LE(t.records[i].inner_count, p_bar) << "p " << p << " k " << i;
      EXPECT_GE(t.records[i].step, alpha_tilde * (1 - 1e-12)) << "p " << p << " k " << i;
    }
    EXPECT_TRUE(certify_descent(t, t.rho, t.theta).passed);
  }
}

TEST(RunDeala, ArmijoAcceptanceRecheckedPostHoc) {
  auto gen = generate_problem(19, ProblemKind::leastp, 80, 20, {.p = 1.5, .consistent = true});
  const auto obj = to_objective(std::get<LeastPProblem>(gen.problem));
  DealConfig cfg;
  cfg.store_iterates = true;
  auto t = run_deala(obj, default_start(20, 4), cfg);
  const double beta = t.params.at("beta");
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const Vector& x = *t.records[i].x;
    const Vector g = obj.gradient(x);
    const Vector d = std::pow(g.norm(), beta) * (-g);
    EXPECT_LE(obj.value(*t.records[i + 1].x),
              obj.value(x) + cfg.armijo.sigma * t.records[i].step * g.dot(d) + 1e-12 * std::max(1.0, obj.value(x)));
  }
}

TEST(RunDeala, HeuristicBetaIsFlagged) {
  auto gen = generate_problem(19, ProblemKind::leastp, 80, 20, {.p = 1.5, .consistent = true});
  const auto obj = to_objective(std::get<LeastPProblem>(gen.problem));
  DealConfig cfg;
  cfg.direction.beta = -0.2;
  cfg.max_iter = 200;
  auto t = run_deala(obj, default_start(20, 4), cfg);
  EXPECT_TRUE(t.heuristic);
  EXPECT_GT(t.size(), 1u);
}

TEST(RunDeala, WrongLipschitzHitsBacktrackLimit) {
  auto f = half_square(1, 1e6);
  f.holder = HolderInfo{1.0, 1.0};
  DealConfig cfg;
  cfg.armijo.max_backtracks = 3;
  auto t = run_deala(f, vec({1.0}), cfg);
  EXPECT_EQ(t.termination, "backtrack_limit");
  EXPECT_EQ(t.records.back().inner_count, 3);
}

TEST(Properties, DescentAndDisplacementOnSeededLeastP) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto gen = generate_problem(seed, ProblemKind::leastp, 60, 15, {.p = 1.5, .consistent = true});
    const auto obj = to_objective(std::get<LeastPProblem>(gen.problem));
    DealConfig cfg;
    cfg.store_iterates = true;
    cfg.max_iter = 2000;
    for (auto run : {&run_dealc, &run_deala}) {
      auto t = run(obj, default_start(15, seed), cfg);
      auto re = reevaluate(t, obj);
      EXPECT_TRUE(certify_descent(re, t.rho, t.theta).passed) << t.solver_id << " seed " << seed;
      EXPECT_TRUE(certify_displacement(re, *t.displacement_c, t.theta).passed) << t.solver_id << " seed " << seed;
      EXPECT_TRUE(certify_monotone(re).passed);
    }
  }
}
