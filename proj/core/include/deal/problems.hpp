#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "deal/objective.hpp"

namespace deal {

/// f(x) = ||Ax - b||^p / p with A of full column rank and 1 < p <= 2.
struct LeastPProblem {
  Matrix A;
  Vector b;
  double p = 2.0;
  double sigma_min = 0.0;
  double opnorm = 0.0;
  Vector x_ls;
  double fstar = 0.0;
  bool consistent = false;
  std::uint64_t seed = 0;
};

/// phi(x) = ||Ax - b||^2 / 2 + lambda ||x||_1, with L = ||A||^2.
struct LassoProblem {
  Matrix A;
  Vector b;
  double lambda = 0.1;
  double L = 0.0;
  std::uint64_t seed = 0;
};

/// phi(x) = sum_i |x_i|^s, a test family with KL exponent 1 - 1/s.
struct PowerAbsProblem {
  double s = 4.0;
  std::size_t n = 1;
};

/// f(x) = x^T Q x / 2 + c^T x with Q symmetric positive semidefinite.
struct QuadraticProblem {
  Matrix Q;
  Vector c;
  double L = 0.0;       ///< largest eigenvalue of Q
  double mu = 0.0;      ///< smallest eigenvalue of Q
  std::uint64_t seed = 0;
};

using Problem = std::variant<LeastPProblem, LassoProblem, PowerAbsProblem, QuadraticProblem>;

enum class ProblemKind { leastp, lasso, power_abs, quadratic };

ProblemKind parse_problem_kind(const std::string& name);
std::string to_string(ProblemKind kind);
ProblemKind kind_of(const Problem& problem);

/// Builds a LeastP instance and caches sigma_min, ||A||, x_ls and f*.
LeastPProblem make_leastp(Matrix A, Vector b, double p);
LassoProblem make_lasso(Matrix A, Vector b, double lambda);
PowerAbsProblem make_power_abs(double s, std::size_t n);
QuadraticProblem make_quadratic(Matrix Q, Vector c);

std::pair<double, Vector> leastp_value_grad(const LeastPProblem& problem, const Vector& x);

struct LeastPConstants {
  double nu = 1.0;
  double L = 1.0;
  double vartheta = 0.5;
  double tau = 1.0;
};

/// Hoelder exponent/constant and global KL exponent/constant of a LeastP instance.
LeastPConstants leastp_constants(const LeastPProblem& problem);

std::pair<double, Vector> lasso_smooth_value_grad(const LassoProblem& problem, const Vector& x);
double lasso_value(const LassoProblem& problem, const Vector& x);

/// Global KL constants of sum |x_i|^s on R^n.
KLInfo power_abs_kl(const PowerAbsProblem& problem);

SmoothObjective to_objective(const LeastPProblem& problem);
SmoothObjective to_objective(const QuadraticProblem& problem);
CompositeObjective to_composite(const LassoProblem& problem);
ProxCapable to_prox_capable(const PowerAbsProblem& problem);

struct ProblemParams {
  double p = 1.5;
  double lambda = 0.1;
  double s = 4.0;
  bool consistent = false;
};

struct GeneratedProblem {
  Problem problem;
  std::uint64_t seed_used = 0;
  int regenerations = 0;
};

/// Deterministic instance generation: i.i.d. standard normal entries; for
/// LeastP with `consistent` set, b = A x_true with seeded x_true. A rank
/// deficient draw (sigma_min < 1e-10) is regenerated with seed + 1.
GeneratedProblem generate_problem(std::uint64_t seed, ProblemKind kind, std::size_t m,
                                  std::size_t n, const ProblemParams& params = {});

struct ReferenceOptimum {
  double fstar = 0.0;
  std::optional<Vector> xstar;
  bool low_confidence = false;
  std::string method;
};

/// Reference optimal value (and minimizer when cheaply available).
ReferenceOptimum reference_optimum(const Problem& problem);

/// Replayable JSON descriptor: kind, dims, seed, params and cached constants.
std::string problem_descriptor_json(const Problem& problem, const ProblemParams& params);

}  // namespace deal
