#include "deal/envelopes.hpp"

#include <cmath>

#include "deal/errors.hpp"
#include "deal/oracles.hpp"

namespace deal {
namespace {

void check_gamma_p(double gamma, double p) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be positive");
  if (!(p > 1.0) || !std::isfinite(p)) throw UsageError("envelope order p must exceed 1");
}

constexpr double kBracketCap = 1e6;

}  // namespace

Vector prox_l1(const Vector& x, double w) {
  if (!(w > 0.0)) throw UsageError("soft-threshold weight must be positive");
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x(i)) - w;
    y(i) = a > 0.0 ? std::copysign(a, x(i)) : 0.0;
  }
  return y;
}

ProxResult prox_home_separable(const std::function<double(double)>& g_scalar, const Vector& x, double gamma,
                               double p) {
  check_gamma_p(gamma, p);
  if (p != 2.0 && x.size() != 1) {
    throw CapabilityError("coordinatewise HOME prox is exact only for p = 2 or one-dimensional x");
  }
  ProxResult out;
  out.point.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    auto h = [&](double t) { return g_scalar(t) + std::pow(std::abs(xi - t), p) / (p * gamma); };
    double R = 1.0 + 2.0 * std::abs(xi);
    for (;;) {
      const double d = R * 1e-3;
      const bool left_ok = !(h(xi - R) < h(xi - R + d));
      const bool right_ok = !(h(xi + R) < h(xi + R - d));
      if (left_ok && right_ok) break;
      if (R >= kBracketCap) throw DomainError("prox subproblem appears unbounded below (bracket reached 1e6)");
      R = std::min(R * 4.0, kBracketCap);
    }
    const auto m = oracle::scalar_minimize(h, xi - R, xi + R, {}, {0.0, xi});
    out.point(i) = m.argmin;
    out.multi_valued = out.multi_valued || m.multi_valued;
  }
  return out;
}

EnvelopeEval home_value_grad(const ProxCapable& g, const Vector& x, double gamma, double p) {
  check_gamma_p(gamma, p);
  if (!g.prox) throw CapabilityError("function '" + g.name + "' has no prox oracle");
  const ProxResult pr = g.prox(x, gamma, p);
  EnvelopeEval e;
  e.x = x;
  e.prox_point = pr.point;
  e.multi_valued = pr.multi_valued;
  const Vector r = x - pr.point;
  const double nr = r.norm();
  e.value = g.value(pr.point) + std::pow(nr, p) / (p * gamma);
  if (!pr.multi_valued) {
    e.gradient = nr == 0.0 ? Vector::Zero(x.size()).eval() : Vector(std::pow(nr, p - 2.0) * r / gamma);
  }
  return e;
}

Vector forward_backward_map(const CompositeObjective& problem, const Vector& x, double gamma) {
  const double L = problem.lipschitz();
  if (!(gamma > 0.0) || !(gamma * L < 1.0)) throw UsageError("forward-backward step needs 0 < gamma < 1/L");
  const Vector g = problem.smooth.gradient(x);
  return problem.nonsmooth.prox(x - gamma * g, gamma, 2.0).point;
}

namespace {
struct FbeParts {
  double f;
  Vector grad;
  Vector T;
  double value;
  bool multi_valued;
};

FbeParts fbe_parts(const CompositeObjective& problem, const Vector& x, double gamma) {
  const double L = problem.lipschitz();
  if (!(gamma > 0.0) || !(gamma * L < 1.0)) throw UsageError("forward-backward envelope needs 0 < gamma < 1/L");
  auto [f, g] = problem.smooth.evaluate(x);
  const ProxResult pr = problem.nonsmooth.prox(x - gamma * g, gamma, 2.0);
  const Vector d = pr.point - x;
  const double value = f + g.dot(d) + d.squaredNorm() / (2.0 * gamma) + problem.nonsmooth.value(pr.point);
  return {f, std::move(g), pr.point, value, pr.multi_valued};
}
}  // namespace

double fbe_value(const CompositeObjective& problem, const Vector& x, double gamma) {
  return fbe_parts(problem, x, gamma).value;
}

EnvelopeEval fbe_value_grad(const CompositeObjective& problem, const Vector& x, double gamma) {
  if (!problem.smooth.has_hessian()) {
    throw CapabilityError("forward-backward envelope gradient needs a Hessian-apply oracle");
  }
  FbeParts parts = fbe_parts(problem, x, gamma);
  EnvelopeEval e;
  e.x = x;
  e.prox_point = parts.T;
  e.value = parts.value;
  e.multi_valued = parts.multi_valued;
  if (!parts.multi_valued) {
    const Vector r = x - parts.T;
    e.gradient = Vector((r - gamma * problem.smooth.hessian_apply(x, r)) / gamma);
  }
  return e;
}

ProxCapable l1_norm(double lambda) {
  if (!(lambda > 0.0)) throw UsageError("l1 weight lambda must be positive");
  ProxCapable g;
  g.name = "l1";
  g.closed_form = true;
  g.separable = true;
  g.scalar = [lambda](double t) { return lambda * std::abs(t); };
  g.value = [lambda](const Vector& x) { return lambda * x.lpNorm<1>(); };
  g.prox = [lambda, scalar = g.scalar](const Vector& x, double gamma, double p) {
    if (p == 2.0) {
      if (!(gamma > 0.0)) throw UsageError("gamma must be positive");
      return ProxResult{prox_l1(x, gamma * lambda), false};
    }
    return prox_home_separable(scalar, x, gamma, p);
  };
  return g;
}

ProxCapable separable_function(std::function<double(double)> scalar, std::string name) {
  ProxCapable g;
  g.name = std::move(name);
  g.separable = true;
  g.scalar = scalar;
  g.value = [scalar](const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += scalar(x(i));
    return s;
  };
  g.prox = [scalar](const Vector& x, double gamma, double p) { return prox_home_separable(scalar, x, gamma, p); };
  return g;
}

ProxCapable zero_function() {
  ProxCapable g;
  g.name = "zero";
  g.closed_form = true;
  g.separable = true;
  g.scalar = [](double) { return 0.0; };
  g.value = [](const Vector&) { return 0.0; };
  g.prox = [](const Vector& x, double gamma, double p) {
    check_gamma_p(gamma, p);
    return ProxResult{x, false};
  };
  return g;
}

SmoothObjective fbe_objective(const CompositeObjective& problem, double gamma) {
  SmoothObjective obj;
  obj.dim = problem.smooth.dim;
  obj.value = [problem, gamma](const Vector& x) { return fbe_value(problem, x, gamma); };
  obj.value_grad = [problem, gamma](const Vector& x) {
    EnvelopeEval e = fbe_value_grad(problem, x, gamma);
    if (!e.gradient) throw NumericalError("forward-backward map is multi-valued at this point");
    return std::make_pair(e.value, std::move(*e.gradient));
  };
  obj.gradient = [vg = obj.value_grad](const Vector& x) { return vg(x).second; };
  obj.fstar = problem.fstar;
  return obj;
}

SmoothObjective home_objective(const ProxCapable& g, double gamma, double p, std::size_t dim) {
  check_gamma_p(gamma, p);
  SmoothObjective obj;
  obj.dim = dim;
  obj.value = [g, gamma, p](const Vector& x) { return home_value_grad(g, x, gamma, p).value; };
  obj.value_grad = [g, gamma, p](const Vector& x) {
    EnvelopeEval e = home_value_grad(g, x, gamma, p);
    if (!e.gradient) throw NumericalError("prox is multi-valued; envelope gradient undefined at this point");
    return std::make_pair(e.value, std::move(*e.gradient));
  };
  obj.gradient = [vg = obj.value_grad](const Vector& x) { return vg(x).second; };
  return obj;
}

}  // namespace deal
