#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deal/objective.hpp"

namespace deal {

enum class Regime { linear, sublinear, inconclusive };
std::string to_string(Regime regime);

/// Rate fit over the tail of a trace.
struct RateReport {
  /// Largest consecutive gap ratio in the tail.
  std::optional<double> q_hat_max;
  /// exp(slope) of the least-squares fit of log(gap) against k.
  std::optional<double> q_hat_ls;
  /// 1 - rho / tau^theta when KL constants are known.
  std::optional<double> q_theory;
  std::optional<double> vartheta_hat;
  std::optional<double> mu_hat;
  std::optional<double> decay_hat;
  double linear_residual = 0.0;
  double sublinear_residual = 0.0;
  Regime regime = Regime::inconclusive;
  std::size_t tail_window = 0;
  std::string note;
};

/// Gaps below 1e3 * machine epsilon * max(1, |f*|) are numerically dead.
double gap_floor(double fstar);

/// K(x, y) = ceil((y log(1/eps) + log x) / log(1/q) + 1), clamped below at 1.
std::int64_t complexity_K(double x, double y, double eps, double q);

/// Fits f_{k+1} - f* <= q (f_k - f*) on the tail. q_hat is reported whenever a
/// ratio exists; the regime needs at least 5 tail points.
RateReport fit_linear_rate(const IterateTrace& trace, double fstar, double tail_fraction = 0.5);

struct SublinearFit {
  std::optional<double> mu_hat;
  std::optional<double> decay_hat;
  double residual = 0.0;
  std::size_t tail_window = 0;
};

/// Least-squares fit of log(gap) against log(k): gap ~ mu k^{-decay}.
SublinearFit fit_sublinear(const IterateTrace& trace, double fstar, double tail_fraction = 0.5);

struct KLExponentEstimate {
  std::optional<double> vartheta_hat;
  double residual = 0.0;
  std::size_t points = 0;
};

/// Heuristic: slope of log ||g|| against log(f - f*) on the tail, which
/// equals the KL exponent when the inequality is nearly tight.
KLExponentEstimate estimate_kl_exponent(const IterateTrace& trace, double fstar,
                                        double tail_fraction = 0.5);

struct ComplexityInputs {
  double fstar = 0.0;
  double rho = 0.0;
  double theta = 2.0;
  double tau = 1.0;
  double eps = 1e-6;
  /// Reference minimizer for the iterate criterion (needs stored iterates).
  std::optional<Vector> xstar;
  /// Displacement constant for the iterate bound.
  std::optional<double> c;
};

struct ComplexityCriterion {
  std::string name;
  std::optional<std::int64_t> measured;  ///< first k meeting the criterion
  std::int64_t bound = 0;
  bool available = false;
  bool passed = true;
  std::string note;
};

struct ComplexityReport {
  double q = 0.0;
  bool vacuous = false;
  bool passed = true;
  std::string note;
  std::vector<ComplexityCriterion> criteria;
};

/// Measures N^f, N and N^x from the trace and compares them to the K bounds.
/// A criterion not reached within the trace fails only when the trace already
/// ran past its bound.
ComplexityReport verify_complexity(const IterateTrace& trace, const ComplexityInputs& in);

struct KLSampleReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  /// max (f - f*)^vartheta / ||g|| over samples with positive gap.
  double tightest_tau = 0.0;
  bool passed = true;
};

using PointSampler = std::function<Vector(std::size_t index)>;

/// Samples points and counts violations of (f - f*)^vartheta <= tau ||grad f||
/// beyond 1e-8 relative slack. Requires objective.fstar.
KLSampleReport kl_sampling_certificate(const SmoothObjective& objective, const PointSampler& sampler,
                                       double vartheta, double tau, std::size_t n_samples);

/// Sampler uniform on [-radius, radius]^n.
PointSampler box_sampler(std::size_t n, double radius, std::uint64_t seed);

/// (f_k - f*)^{vartheta - 1/theta} <= tau / rho^{1/theta} at every record.
bool kl_theta_consistent(const IterateTrace& trace, double fstar, double vartheta, double tau);

}  // namespace deal
