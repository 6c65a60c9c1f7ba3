#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "deal/objective.hpp"

namespace deal::oracle {

/// Tolerances and budgets for the brute-force reference oracles.
struct OracleConfig {
  /// Central-difference step is fd_scale * (1 + |x_i|).
  double fd_scale = 6.0554544523933395e-06;  // cbrt(DBL_EPSILON)
  int grid_points = 2001;
  int starts = 5;
  double golden_tol = 1e-10;
  /// Two local minima whose values agree within this relative tolerance are treated as ties.
  double tie_tol = 1e-8;
  double spectral_tol = 1e-10;
  int spectral_cap = 200000;
  /// Exact SVD is used when min(m, n) does not exceed this.
  std::size_t exact_svd_limit = 64;
};

struct FdGradient {
  Vector gradient;
  /// Coordinates whose stencil straddles a kink (derivative jump detected).
  std::vector<std::size_t> kink_coordinates;
  bool skipped() const { return !kink_coordinates.empty(); }
};

/// Central-difference gradient with per-coordinate scaled steps.
/// Throws NumericalError naming the coordinate when a probe is non-finite.
FdGradient finite_diff_gradient(const std::function<double(const Vector&)>& value,
                                const Vector& x, const OracleConfig& cfg = {});

/// Plain golden-section search for a minimum of a unimodal g on [a, b].
double golden_section(const std::function<double(double)>& g, double a, double b,
                      double tol = 1e-10, int max_iter = 500);

struct ScalarMinimum {
  double argmin = 0.0;
  double value = std::numeric_limits<double>::infinity();
  /// Another local minimizer ties with the returned one.
  bool multi_valued = false;
  /// Refined local minimizers, best first.
  std::vector<double> candidates;
};

/// Global minimization of g over [lo, hi]: grid pre-scan, then golden-section
/// refinement of the best `cfg.starts` basins. Extra points in `probes` (inside
/// the bracket) are always evaluated, which catches isolated finite values.
/// Among tied minimizers the one smallest in absolute value is returned.
/// Throws DomainError when g decreases outward at both bracket ends.
ScalarMinimum scalar_minimize(const std::function<double(double)>& g, double lo, double hi,
                              const OracleConfig& cfg = {},
                              const std::vector<double>& probes = {});

struct SpectralConstants {
  double opnorm = 0.0;     ///< ||A|| (largest singular value)
  double sigma_min = 0.0;  ///< smallest singular value of the n columns
  std::string method;      ///< "svd" or "iteration"
};

/// ||A|| and sigma_min(A) for a tall matrix. Power iteration on A^T A for the
/// norm and inverse iteration for sigma_min, or exact SVD on small inputs.
SpectralConstants spectral_constants(const Matrix& A, const OracleConfig& cfg = {});

/// Reference singular values via dense SVD (test cross-check route).
SpectralConstants spectral_constants_svd(const Matrix& A);

/// Largest observed ||grad f(x) - grad f(y)|| / ||x - y||^nu over seeded pairs
/// in a box of the given radius around `center`. A lower estimate of L.
double estimate_holder_constant(const SmoothObjective& objective, double nu, const Vector& center,
                                double radius, int pairs, std::uint64_t seed);

/// Brute-force HOME prox of a non-separable-in-general g for n <= 3: nested
/// grid search with progressive refinement. For validating prox oracles only.
ProxResult prox_grid(const std::function<double(const Vector&)>& g, const Vector& x, double gamma,
                     double p, double radius, int levels = 8);

}  // namespace deal::oracle
