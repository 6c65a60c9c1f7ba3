#include "deal/analysis.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "deal/errors.hpp"
#include "deal/rng.hpp"

namespace deal {
namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.rss += r * r;
  }
  return f;
}

void check_trace(const IterateTrace& trace) {
  if (trace.empty()) throw UsageError("analysis needs a nonempty trace");
  for (const auto& r : trace.records)
    if (!std::isfinite(r.f) || !std::isfinite(r.grad_norm)) throw DataError("trace has non-finite entries");
}

void check_fstar(const IterateTrace& trace, double fstar) {
  if (!std::isfinite(fstar)) throw UsageError("fstar must be finite");
  double fmin = trace.records.front().f;
  for (const auto& r : trace.records) fmin = std::min(fmin, r.f);
  if (fstar > fmin + 1e-12 * std::max(1.0, std::abs(fstar))) {
    throw UsageError("fstar exceeds the smallest recorded objective value");
  }
}

struct TailPoint {
  std::int64_t k;
  double gap;
  double grad_norm;
};

/// Records with a gap above the floor; the last tail_fraction of them.
std::vector<TailPoint> tail_points(const IterateTrace& trace, double fstar, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw UsageError("tail_fraction must lie in (0, 1]");
  const double floor = gap_floor(fstar);
  std::vector<TailPoint> live;
  for (const auto& r : trace.records) {
    const double gap = r.f - fstar;
    if (gap > floor) live.push_back({r.k, gap, r.grad_norm});
  }
  const auto keep = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(live.size())));
  const std::size_t count = std::min(live.size(), std::max<std::size_t>(keep, 2));
  return {live.end() - static_cast<std::ptrdiff_t>(count), live.end()};
}

constexpr std::size_t kMinTail = 5;

}  // namespace

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::linear: return "linear";
    case Regime::sublinear: return "sublinear";
    case Regime::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double gap_floor(double fstar) { return 1e3 * DBL_EPSILON * std::max(1.0, std::abs(fstar)); }

std::int64_t complexity_K(double x, double y, double eps, double q) {
  if (!(x > 0.0) || !(y > 0.0) || !(eps > 0.0)) throw UsageError("complexity_K needs x, y, eps > 0");
  if (!(q > 0.0 && q < 1.0)) throw UsageError("complexity_K needs 0 < q < 1");
  const double v = std::ceil((y * std::log(1.0 / eps) + std::log(x)) / std::log(1.0 / q) + 1.0);
  if (!(v >= 1.0)) return 1;
  if (v > 9e18) throw NumericalError("complexity bound overflows");
  return static_cast<std::int64_t>(v);
}

SublinearFit fit_sublinear(const IterateTrace& trace, double fstar, double tail_fraction) {
  check_trace(trace);
  check_fstar(trace, fstar);
  SublinearFit out;
  std::vector<double> lx, ly;
  for (const auto& p : tail_points(trace, fstar, tail_fraction)) {
    if (p.k < 1) continue;
    lx.push_back(std::log(static_cast<double>(p.k)));
    ly.push_back(std::log(p.gap));
  }
  out.tail_window = lx.size();
  if (lx.size() < 2) return out;
  const LineFit f = least_squares(lx, ly);
  out.decay_hat = -f.slope;
  out.mu_hat = std::exp(f.intercept);
  out.residual = f.rss;
  return out;
}

RateReport fit_linear_rate(const IterateTrace& trace, double fstar, double tail_fraction) {
  check_trace(trace);
  check_fstar(trace, fstar);
  RateReport rep;
  const auto tail = tail_points(trace, fstar, tail_fraction);
  rep.tail_window = tail.size();
  if (tail.size() < 2) {
    rep.note = "fewer than two gaps above the numeric floor";
    return rep;
  }
  double qmax = 0.0;
  bool any_ratio = false;
  std::vector<double> ks, lg;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    ks.push_back(static_cast<double>(tail[i].k));
    lg.push_back(std::log(tail[i].gap));
    if (i > 0 && tail[i].k == tail[i - 1].k + 1) {
      qmax = std::max(qmax, tail[i].gap / tail[i - 1].gap);
      any_ratio = true;
    }
  }
  if (any_ratio) rep.q_hat_max = qmax;
  const LineFit lin = least_squares(ks, lg);
  rep.q_hat_ls = std::exp(lin.slope);
  rep.linear_residual = lin.rss;

  const SublinearFit sub = fit_sublinear(trace, fstar, tail_fraction);
  rep.mu_hat = sub.mu_hat;
  rep.decay_hat = sub.decay_hat;
  rep.sublinear_residual = sub.residual;
  const auto kl = estimate_kl_exponent(trace, fstar, tail_fraction);
  rep.vartheta_hat = kl.vartheta_hat;

  if (tail.size() < kMinTail) {
    rep.note = "tail shorter than 5 points; regime not classified";
    return rep;
  }
  if (sub.decay_hat && rep.sublinear_residual < rep.linear_residual) {
    rep.regime = Regime::sublinear;
  } else if (rep.q_hat_max && *rep.q_hat_max < 1.0) {
    rep.regime = Regime::linear;
  } else {
    rep.note = "linear fit preferred but the tail is not contracting";
  }
  return rep;
}

KLExponentEstimate estimate_kl_exponent(const IterateTrace& trace, double fstar, double tail_fraction) {
  check_trace(trace);
  check_fstar(trace, fstar);
  KLExponentEstimate out;
  std::vector<double> lx, ly;
  for (const auto& p : tail_points(trace, fstar, tail_fraction)) {
    if (!(p.grad_norm > 0.0)) continue;
    lx.push_back(std::log(p.gap));
    ly.push_back(std::log(p.grad_norm));
  }
  out.points = lx.size();
  if (lx.size() < 2 || *std::max_element(lx.begin(), lx.end()) == *std::min_element(lx.begin(), lx.end())) {
    return out;
  }
  const LineFit f = least_squares(lx, ly);
  out.vartheta_hat = f.slope;
  out.residual = f.rss;
  return out;
}

ComplexityReport verify_complexity(const IterateTrace& trace, const ComplexityInputs& in) {
  check_trace(trace);
  validate_constants(in.rho, in.theta);
  if (!(in.tau > 0.0) || !(in.eps > 0.0)) throw UsageError("tau and eps must be positive");
  ComplexityReport rep;
  rep.q = 1.0 - in.rho / std::pow(in.tau, in.theta);
  if (!(rep.q > 0.0 && rep.q < 1.0)) {
    rep.vacuous = true;
    rep.note = "q = 1 - rho / tau^theta is outside (0, 1); bounds are vacuous and were skipped";
    return rep;
  }
  const double F0 = trace.records.front().f - in.fstar;
  const std::int64_t last_k = trace.records.back().k;

  auto judge = [&](ComplexityCriterion& c, double x, double y, auto&& reached) {
    c.available = true;
    c.bound = x > 0.0 ? complexity_K(x, y, in.eps, rep.q) : 1;
    for (const auto& r : trace.records) {
      if (reached(r)) {
        c.measured = r.k;
        break;
      }
    }
    if (c.measured) {
      c.passed = *c.measured <= c.bound;
    } else if (last_k >= c.bound) {
      c.passed = false;
      c.note = "criterion not reached although the trace ran past the bound";
    } else {
      c.note = "criterion not reached within the trace; unresolved";
    }
  };

  ComplexityCriterion nf;
  nf.name = "N_f";
  judge(nf, F0, 1.0, [&](const IterateRecord& r) { return r.f - in.fstar <= in.eps; });
  rep.criteria.push_back(nf);

  ComplexityCriterion ng;
  ng.name = "N_grad";
  judge(ng, F0 / in.rho, in.theta, [&](const IterateRecord& r) { return r.grad_norm <= in.eps; });
  rep.criteria.push_back(ng);

  ComplexityCriterion nx;
  nx.name = "N_x";
  const bool have_iterates = std::all_of(trace.records.begin(), trace.records.end(),
                                         [](const IterateRecord& r) { return r.x.has_value(); });
  if (in.xstar && in.c && have_iterates) {
    const double e = (in.theta - 1.0) / in.theta;
    const double s = std::pow(*in.c / (1.0 - std::pow(rep.q, e)), 1.0 / e);
    judge(nx, s * F0 / in.rho, 1.0 / e, [&](const IterateRecord& r) { return (*r.x - *in.xstar).norm() <= in.eps; });
  } else {
    nx.note = "needs a reference minimizer, the displacement constant and stored iterates";
  }
  rep.criteria.push_back(nx);

  for (const auto& c : rep.criteria) rep.passed = rep.passed && c.passed;
  return rep;
}

KLSampleReport kl_sampling_certificate(const SmoothObjective& objective, const PointSampler& sampler,
                                       double vartheta, double tau, std::size_t n_samples) {
  if (!objective.fstar) throw UsageError("KL sampling needs the objective's optimal value");
  if (!(vartheta > 0.0 && vartheta < 1.0) || !(tau > 0.0)) throw UsageError("invalid KL constants");
  const double fstar = *objective.fstar;
  KLSampleReport rep;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Vector x = sampler(i);
    auto [f, g] = objective.evaluate(x);
    const double gap = f - fstar;
    const double gn = g.norm();
    ++rep.samples;
    if (!(gap > 0.0)) continue;
    const double lhs = std::pow(gap, vartheta);
    if (gn > 0.0) rep.tightest_tau = std::max(rep.tightest_tau, lhs / gn);
    if (lhs > tau * gn * (1.0 + 1e-8)) ++rep.violations;
  }
  rep.violation_fraction = rep.samples ? static_cast<double>(rep.violations) / static_cast<double>(rep.samples) : 0.0;
  rep.passed = rep.violations == 0;
  return rep;
}

PointSampler box_sampler(std::size_t n, double radius, std::uint64_t seed) {
  if (n == 0 || !(radius > 0.0)) throw UsageError("box sampler needs n >= 1 and radius > 0");
  return [n, radius, seed](std::size_t index) {
    Rng rng(seed * 0x9E3779B97F4A7C15ull + index);
    return rng.uniform_vector(static_cast<Eigen::Index>(n), -radius, radius);
  };
}

bool kl_theta_consistent(const IterateTrace& trace, double fstar, double vartheta, double tau) {
  check_trace(trace);
  validate_constants(trace.rho, trace.theta);
  const double bound = tau / std::pow(trace.rho, 1.0 / trace.theta);
  const double e = vartheta - 1.0 / trace.theta;
  for (const auto& r : trace.records) {
    const double gap = r.f - fstar;
    if (!(gap > 0.0)) continue;
    if (std::pow(gap, e) > bound * (1.0 + 1e-8)) return false;
  }
  return true;
}

}  // namespace deal
