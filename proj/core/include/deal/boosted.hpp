#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "deal/directions.hpp"
#include "deal/objective.hpp"

namespace deal {

/// p = 1 / (1 - vartheta), which makes theta = p / (p - 1) equal 1 / vartheta.
double choose_order(double vartheta);

struct BoostedConfig {
  /// Prox parameter; defaults to 0.95 / L for BPGA and 1 for BHiPPA.
  std::optional<double> gamma;
  /// Acceptance parameter; defaults to the midpoint of the admissible interval.
  std::optional<double> sigma;
  /// Backtracking base for BHiPPA (kappa = eta^m, m = 0, 1, ...).
  double eta = 0.5;
  /// Step base for BPGA (alpha = alpha_bar^m, m = 1, 2, ...).
  double alpha_bar = 0.5;
  /// Trials before falling back to the plain envelope step; 0 disables boosting.
  int max_linesearch = 50;
  /// HOME order for BHiPPA.
  double p = 2.0;
  DirectionOptions direction;
  double eps = 1e-6;
  int max_iter = 10000;
  bool store_iterates = false;
  std::uint64_t seed = 0;
  std::string config_digest;
};

/// Boosted proximal gradient on the forward-backward envelope.
/// x_{k+1} = T_gamma(x_k) + alpha_k d_k, accepted when
/// FBE(x_{k+1}) <= FBE(x_k) - sigma / (1 + gamma L)^2 ||grad FBE(x_k)||^2.
/// Certifies rho = sigma / (1 + gamma L)^2 and theta = 2.
IterateTrace run_bpga(const CompositeObjective& problem, const Vector& x0,
                      const BoostedConfig& config);

/// Boosted high-order proximal point on the HOME of phi.
/// x_{k+1} = (1 - kappa) prox(x_k) + kappa (x_k + d_k), accepted when
/// env(x_{k+1}) <= env(x_k) - sigma gamma^{1/(p-1)} / p ||grad env(x_k)||^{p/(p-1)}.
/// Certifies rho = sigma gamma^{1/(p-1)} / p and theta = p / (p - 1).
IterateTrace run_bhippa(const ProxCapable& phi, const Vector& x0, const BoostedConfig& config);

}  // namespace deal
