#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "deal/objective.hpp"

namespace deal {

/// Outcome of a per-iteration certificate over a trace.
struct CertificateReport {
  std::string name;
  bool passed = true;
  std::size_t checked = 0;
  std::size_t violations = 0;
  /// Largest (lhs - allowed) over the checked items; <= 0 when everything passes.
  double worst_slack = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> first_violation;
  std::string note;
};

inline constexpr double kDefaultRelTol = 1e-10;

/// Checks f(x^{k+1}) - f(x^k) + rho ||g_k||^theta <= rel_tol * max(1, |f(x^k)|)
/// for every consecutive pair of records.
CertificateReport certify_descent(const IterateTrace& trace, double rho, double theta,
                                  double rel_tol = kDefaultRelTol);

/// Checks ||x^{k+1} - x^k|| <= c ||g_k||^{theta-1} (1 + rel_tol) for every
/// record that has a successor. All k are checked; the first failing index is
/// reported rather than guessing where "sufficiently large k" begins. When both
/// iterates are stored, the rounding of x^{k+1} - x^k (4 eps max ||x||) is allowed.
CertificateReport certify_displacement(const IterateTrace& trace, double c, double theta,
                                       double rel_tol = kDefaultRelTol);

/// Checks min_{k<N} ||g_k|| <= ((f(x^0) - f*) / (rho N))^{1/theta} for every prefix N.
CertificateReport min_grad_bound_check(const IterateTrace& trace, double rho, double theta,
                                       double fstar, double rel_tol = kDefaultRelTol);

/// Non-increasing f along the trace (up to rel_tol * max(1, |f|)).
CertificateReport certify_monotone(const IterateTrace& trace, double rel_tol = kDefaultRelTol);

/// Recomputes f, grad_norm and displacement from the stored iterates using
/// an independent oracle, so certificates never trust solver-logged values.
/// Throws DataError when a record has no stored iterate.
IterateTrace reevaluate(const IterateTrace& trace, const SmoothObjective& objective);

}  // namespace deal
