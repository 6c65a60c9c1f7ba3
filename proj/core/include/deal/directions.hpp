#pragma once

#include <deque>
#include <optional>
#include <string>

#include "deal/objective.hpp"

namespace deal {

enum class DirectionKind { zero, gradient, bb1, bb2, lbfgs };

DirectionKind parse_direction_kind(const std::string& name);
std::string to_string(DirectionKind kind);

struct DirectionOptions {
  DirectionKind kind = DirectionKind::gradient;
  /// Generalization exponent; empty means "auto", resolved by the solver.
  std::optional<double> beta;
  /// Sufficient-descent constants: <g, d> <= -c1 ||g||^2 and ||d|| <= c2 ||g||.
  double c1 = 1.0;
  double c2 = 1.0;
  /// Safeguard interval for Barzilai-Borwein scalings.
  double alpha_min = 1e-8;
  double alpha_max = 1e8;
  int memory = 5;

  /// Defaults per kind: c1 = c2 = 1 for the gradient rule, and
  /// (c1, c2) = (alpha_min, alpha_max) for BB and L-BFGS.
  static DirectionOptions defaults(DirectionKind kind);
};

/// Produces base directions d-bar from (x, grad) and keeps the (s, y) history
/// BB and L-BFGS need. One instance per solver run.
class DirectionRule {
public:
  explicit DirectionRule(DirectionOptions options = {});

  /// The base direction at x. Consecutive calls form the curvature pairs
  /// s = x_k - x_{k-1}, y = g_k - g_{k-1}. Every output satisfies the
  /// sufficient-descent inequalities with (c1, c2), by gradient fallback if
  /// needed (except for the zero rule). Throws UsageError on a zero gradient.
  Vector base_direction(const Vector& x, const Vector& grad);

  /// base_direction scaled by ||grad||^beta.
  Vector direction(const Vector& x, const Vector& grad, double beta);

  /// Whether the last base_direction call fell back to -grad.
  bool last_fallback() const { return last_fallback_; }
  int fallback_count() const { return fallbacks_; }
  void reset();

  const DirectionOptions& options() const { return options_; }
  DirectionKind kind() const { return options_.kind; }

  /// beta = (1 - nu) / nu when options().beta is empty.
  double resolve_beta(double nu) const;
  /// True when an explicit beta differs from (1 - nu) / nu.
  bool heuristic(double nu) const;

private:
  Vector lbfgs_direction(const Vector& grad) const;
  Vector fallback(const Vector& grad);

  DirectionOptions options_;
  std::optional<Vector> prev_x_;
  std::optional<Vector> prev_g_;
  std::optional<Vector> last_s_;
  std::optional<Vector> last_y_;
  std::deque<std::pair<Vector, Vector>> pairs_;
  bool last_fallback_ = false;
  int fallbacks_ = 0;
};

/// Barzilai-Borwein scaling <s,s>/<s,y> (BB1) or <s,y>/<y,y> (BB2); empty
/// when the curvature <s,y> is not positive.
std::optional<double> bb_scaling(const Vector& s, const Vector& y, DirectionKind kind);

/// d = ||grad||^beta * dbar. Throws UsageError for beta <= -1, or for a zero
/// gradient with beta < 0.
Vector generalize(const Vector& dbar, const Vector& grad, double beta);

struct DescentCheck {
  bool passed = false;
  double c1_measured = 0.0;  ///< -<g, d> / ||g||^2
  double c2_measured = 0.0;  ///< ||d|| / ||g||
};

/// Checks <g, dbar> <= -c1 ||g||^2 and ||dbar|| <= c2 ||g||, reporting the
/// tightest constants the pair attains.
DescentCheck validate_sufficient_descent(const Vector& dbar, const Vector& grad, double c1,
                                         double c2);

}  // namespace deal
