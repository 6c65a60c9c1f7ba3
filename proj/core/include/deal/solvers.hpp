#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "deal/directions.hpp"
#include "deal/objective.hpp"

namespace deal {

struct ArmijoParams {
  double sigma = 1e-4;
  double eta = 0.5;
  double alpha_bar = 1.0;
  int max_backtracks = 60;
};

struct DealConfig {
  double eps = 1e-6;
  int max_iter = 10000;
  DirectionOptions direction;
  ArmijoParams armijo;
  bool store_iterates = false;
  /// Replaces the DEAL-C step size; the run is then marked heuristic.
  std::optional<double> alpha_override;
  std::uint64_t seed = 0;
  std::string config_digest;

  void validate() const;
};

/// alpha = (c1 / (c2^{1+nu} L))^{1/nu}, the step maximizing the Hoelder decrease.
double dealc_step_size(double c1, double c2, double nu, double L);

struct ArmijoBound {
  double c_bar = 0.0;
  double p_bar = 0.0;
  double alpha_tilde = 0.0;
};

/// Worst-case backtracking count p_bar and step floor alpha_tilde for an
/// Armijo search on a C^{1,nu}_L function with a generalized direction.
ArmijoBound armijo_bound(double nu, double sigma, double eta, double c1, double c2, double L,
                         double alpha_bar);

/// Constant step-size generalized descent:
/// x_{k+1} = x_k + alpha ||grad f(x_k)||^beta dbar_k.
/// Certifies rho = c1 alpha nu / (1 + nu), theta = 1 + 1/nu, c = c2 alpha.
IterateTrace run_dealc(const SmoothObjective& objective, const Vector& x0,
                       const DealConfig& config);

/// Armijo backtracking generalized descent. Records p_k per step.
/// Certifies rho = sigma min(alpha_tilde, alpha_bar) c1, theta = 1 + 1/nu, c = c2 alpha_bar.
IterateTrace run_deala(const SmoothObjective& objective, const Vector& x0,
                       const DealConfig& config);

}  // namespace deal
