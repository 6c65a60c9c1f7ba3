#include "deal/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deal/errors.hpp"

namespace deal {
namespace {

void require_finite_records(const IterateTrace& trace, const char* what) {
  if (trace.empty()) throw UsageError(std::string(what) + ": trace is empty");
  for (const auto& r : trace.records) {
    if (!std::isfinite(r.f) || !std::isfinite(r.grad_norm)) {
      throw DataError(std::string(what) + ": non-finite entry at k = " + std::to_string(r.k));
    }
    if (r.grad_norm < 0.0) {
      throw DataError(std::string(what) + ": negative gradient norm at k = " + std::to_string(r.k));
    }
  }
}

void note_violation(CertificateReport& rep, std::size_t index, double slack) {
  rep.worst_slack = std::max(rep.worst_slack, slack);
  if (slack > 0.0) {
    ++rep.violations;
    if (!rep.first_violation) rep.first_violation = index;
  }
}

}  // namespace

CertificateReport certify_descent(const IterateTrace& trace, double rho, double theta,
                                  double rel_tol) {
  require_finite_records(trace, "certify_descent");
  validate_constants(rho, theta);
  CertificateReport rep;
  rep.name = "descent";
  const auto& rs = trace.records;
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    const double lhs = rs[i + 1].f - rs[i].f + rho * std::pow(rs[i].grad_norm, theta);
    const double allowed = rel_tol * std::max(1.0, std::abs(rs[i].f));
    note_violation(rep, i, lhs - allowed);
    ++rep.checked;
  }
  rep.passed = rep.violations == 0;
  return rep;
}

CertificateReport certify_displacement(const IterateTrace& trace, double c, double theta,
                                       double rel_tol) {
  require_finite_records(trace, "certify_displacement");
  if (!(c > 0.0)) throw UsageError("certify_displacement: c must be positive");
  if (!(theta > 1.0)) throw UsageError("certify_displacement: theta must exceed 1");
  CertificateReport rep;
  rep.name = "displacement";
  const auto& rs = trace.records;
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    if (!rs[i].displacement) {
      throw DataError("certify_displacement: missing displacement at k = " + std::to_string(rs[i].k));
    }
    double bound = c * std::pow(rs[i].grad_norm, theta - 1.0) * (1.0 + rel_tol);
    if (rs[i].x && rs[i + 1].x) {
      bound += 4.0 * std::numeric_limits<double>::epsilon() * std::max(rs[i].x->norm(), rs[i + 1].x->norm());
    }
    note_violation(rep, i, *rs[i].displacement - bound);
    ++rep.checked;
  }
  rep.passed = rep.violations == 0;
  if (rep.first_violation) rep.note = "first violation at record " + std::to_string(*rep.first_violation);
  return rep;
}

CertificateReport min_grad_bound_check(const IterateTrace& trace, double rho, double theta,
                                       double fstar, double rel_tol) {
  require_finite_records(trace, "min_grad_bound_check");
  validate_constants(rho, theta);
  const auto& rs = trace.records;
  double fmin = rs.front().f;
  for (const auto& r : rs) fmin = std::min(fmin, r.f);
  if (!std::isfinite(fstar) || fstar > fmin + 1e-12 * std::max(1.0, std::abs(fstar))) {
    throw UsageError("min_grad_bound_check: fstar exceeds the smallest recorded f");
  }
  CertificateReport rep;
  rep.name = "min_grad_bound";
  const double gap0 = std::max(0.0, rs.front().f - fstar);
  double running_min = std::numeric_limits<double>::infinity();
  for (std::size_t N = 1; N <= rs.size(); ++N) {
    running_min = std::min(running_min, rs[N - 1].grad_norm);
    const double bound = std::pow(gap0 / (rho * static_cast<double>(N)), 1.0 / theta);
    note_violation(rep, N - 1, running_min - bound * (1.0 + rel_tol));
    ++rep.checked;
  }
  rep.passed = rep.violations == 0;
  return rep;
}

CertificateReport certify_monotone(const IterateTrace& trace, double rel_tol) {
  require_finite_records(trace, "certify_monotone");
  CertificateReport rep;
  rep.name = "monotone";
  const auto& rs = trace.records;
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    note_violation(rep, i, rs[i + 1].f - rs[i].f - rel_tol * std::max(1.0, std::abs(rs[i].f)));
    ++rep.checked;
  }
  rep.passed = rep.violations == 0;
  return rep;
}

IterateTrace reevaluate(const IterateTrace& trace, const SmoothObjective& objective) {
  IterateTrace out = trace;
  auto& rs = out.records;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (!rs[i].x) throw DataError("reevaluate: record k = " + std::to_string(rs[i].k) + " has no stored iterate");
    const auto [f, g] = objective.evaluate(*rs[i].x);
    rs[i].f = f;
    rs[i].grad_norm = g.norm();
    if (i > 0) rs[i - 1].displacement = (*rs[i].x - *rs[i - 1].x).norm();
  }
  if (!rs.empty()) rs.back().displacement.reset();
  return out;
}

}  // namespace deal
