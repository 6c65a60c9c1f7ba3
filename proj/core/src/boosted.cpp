#include "deal/boosted.hpp"

#include <algorithm>
#include <cmath>

#include "deal/envelopes.hpp"
#include "deal/errors.hpp"

namespace deal {

double choose_order(double vartheta) {
  if (!(vartheta > 0.0 && vartheta < 1.0)) throw UsageError("KL exponent must lie in (0, 1)");
  return 1.0 / (1.0 - vartheta);
}

namespace {

void check_common(const BoostedConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw UsageError("eps must be positive");
  if (cfg.max_iter < 0) throw UsageError("max_iter must be nonnegative");
  if (cfg.max_linesearch < 0) throw UsageError("max_linesearch must be nonnegative");
}

IterateRecord make_record(std::int64_t k, double value, double grad_norm, const Vector& x, bool store) {
  IterateRecord r;
  r.k = k;
  r.f = value;
  r.grad_norm = grad_norm;
  if (store) r.x = x;
  return r;
}

}  // namespace

IterateTrace run_bpga(const CompositeObjective& problem, const Vector& x0, const BoostedConfig& config) {
  check_common(config);
  const double L = problem.lipschitz();
  const double gamma = config.gamma.value_or(0.95 / L);
  if (!(gamma > 0.0) || !(gamma * L < 1.0)) throw UsageError("boosted proximal gradient needs 0 < gamma < 1/L");
  const double sigma_max = gamma * (1.0 - gamma * L) / 2.0;
  const double sigma = config.sigma.value_or(0.5 * sigma_max);
  if (!(sigma > 0.0 && sigma < sigma_max)) throw UsageError("sigma must lie in (0, gamma (1 - gamma L) / 2)");
  if (!(config.alpha_bar > 0.0 && config.alpha_bar < 1.0)) throw UsageError("alpha_bar must lie in (0, 1)");
  if (!problem.smooth.has_hessian()) throw CapabilityError("boosted proximal gradient needs a Hessian-apply oracle");

  DirectionRule rule(config.direction);
  const double beta = config.direction.beta.value_or(0.0);
  const double rho = sigma / std::pow(1.0 + gamma * L, 2);

  IterateTrace trace;
  trace.solver_id = "bpga";
  trace.seed = config.seed;
  trace.config_digest = config.config_digest;
  trace.rho = rho;
  trace.theta = 2.0;
  trace.params = {{"gamma", gamma}, {"sigma", sigma}, {"alpha_bar", config.alpha_bar}, {"L", L}, {"beta", beta}};

  Vector x = x0;
  EnvelopeEval cur = fbe_value_grad(problem, x, gamma);
  if (!std::isfinite(cur.value)) throw NumericalError("envelope is not finite at the starting point");
  for (std::int64_t k = 0;; ++k) {
    if (!cur.gradient) {
      const Vector r = x - cur.prox_point;
      const double gn = ((r - gamma * problem.smooth.hessian_apply(x, r)) / gamma).norm();
      trace.records.push_back(make_record(k, cur.value, gn, x, config.store_iterates));
      trace.termination = "multi_valued";
      break;
    }
    const Vector& g = *cur.gradient;
    const double gn = g.norm();
    trace.records.push_back(make_record(k, cur.value, gn, x, config.store_iterates));
    if (gn <= config.eps) {
      trace.termination = "tolerance";
      break;
    }
    if (k >= config.max_iter) {
      trace.termination = "max_iter";
      break;
    }
    const Vector d = rule.direction(x, g, beta);
    const double target = cur.value - rho * gn * gn;
    std::optional<EnvelopeEval> next;
    double step = 0.0;
    int trials = 0;
    if (d.squaredNorm() > 0.0) {
      double alpha = 1.0;
      for (int m = 1; m <= config.max_linesearch; ++m) {
        alpha *= config.alpha_bar;
        ++trials;
        EnvelopeEval e = fbe_value_grad(problem, cur.prox_point + alpha * d, gamma);
        if (std::isfinite(e.value) && e.value <= target) {
          next = std::move(e);
          step = alpha;
          break;
        }
      }
      if (!next) ++trace.fallbacks;
    }
    if (!next) next = fbe_value_grad(problem, cur.prox_point, gamma);
    if (!std::isfinite(next->value) || (next->gradient && !next->gradient->allFinite())) {
      trace.termination = "nonfinite";
      break;
    }
    auto& rec = trace.records.back();
    rec.step = step;
    rec.inner_count = trials;
    rec.displacement = (next->x - x).norm();
    x = next->x;
    cur = std::move(*next);
  }
  trace.x_final = x;
  return trace;
}

IterateTrace run_bhippa(const ProxCapable& phi, const Vector& x0, const BoostedConfig& config) {
  check_common(config);
  const double p = config.p;
  if (!(p > 1.0) || !std::isfinite(p)) throw UsageError("HOME order p must exceed 1");
  const double gamma = config.gamma.value_or(1.0);
  if (!(gamma > 0.0)) throw UsageError("gamma must be positive");
  const double sigma_max = std::min(1.0, 1.0 / (p * gamma));
  const double sigma = config.sigma.value_or(0.5 * sigma_max);
  if (!(sigma > 0.0 && sigma < sigma_max)) throw UsageError("sigma must lie in (0, min(1, 1/(p gamma)))");
  if (!(config.eta > 0.0 && config.eta < 1.0)) throw UsageError("eta must lie in (0, 1)");

  DirectionRule rule(config.direction);
  const double beta = config.direction.beta.value_or(0.0);
  const double theta = p / (p - 1.0);
  const double rho = sigma * std::pow(gamma, 1.0 / (p - 1.0)) / p;
  const double x_tol = config.eps * std::pow(gamma, 1.0 / (p - 1.0));

  IterateTrace trace;
  trace.solver_id = "bhippa";
  trace.seed = config.seed;
  trace.config_digest = config.config_digest;
  trace.rho = rho;
  trace.theta = theta;
  trace.params = {{"gamma", gamma}, {"sigma", sigma}, {"eta", config.eta}, {"p", p}, {"beta", beta}};

  auto envelope = [&](const Vector& x) {
    EnvelopeEval e = home_value_grad(phi, x, gamma, p);
    if (!e.gradient) {
      const Vector r = x - e.prox_point;
      const double nr = r.norm();
      e.gradient = nr == 0.0 ? Vector::Zero(x.size()).eval() : Vector(std::pow(nr, p - 2.0) * r / gamma);
    }
    return e;
  };

  Vector x = x0;
  EnvelopeEval cur = envelope(x);
  if (!std::isfinite(cur.value)) throw NumericalError("envelope is not finite at the starting point");
  for (std::int64_t k = 0;; ++k) {
    const Vector g = *cur.gradient;
    const double gn = g.norm();
    trace.records.push_back(make_record(k, cur.value, gn, x, config.store_iterates));
    if (cur.multi_valued) {
      trace.termination = "multi_valued";
      break;
    }
    if ((x - cur.prox_point).norm() <= x_tol || gn <= config.eps) {
      trace.termination = "tolerance";
      break;
    }
    if (k >= config.max_iter) {
      trace.termination = "max_iter";
      break;
    }
    const Vector d = rule.direction(x, g, beta);
    const double target = cur.value - rho * std::pow(gn, theta);
    std::optional<EnvelopeEval> next;
    double kappa_used = 0.0;
    int trials = 0;
    if (d.squaredNorm() > 0.0) {
      double kappa = 1.0;
      for (int m = 0; m < config.max_linesearch; ++m, kappa *= config.eta) {
        ++trials;
        EnvelopeEval e = envelope((1.0 - kappa) * cur.prox_point + kappa * (x + d));
        if (std::isfinite(e.value) && e.value <= target && !e.multi_valued) {
          next = std::move(e);
          kappa_used = kappa;
          break;
        }
      }
      if (!next) ++trace.fallbacks;
    }
    if (!next) next = envelope(cur.prox_point);
    if (!std::isfinite(next->value)) {
      trace.termination = "nonfinite";
      break;
    }
    auto& rec = trace.records.back();
    rec.step = kappa_used;
    rec.inner_count = trials;
    rec.displacement = (next->x - x).norm();
    x = next->x;
    cur = std::move(*next);
  }
  trace.x_final = x;
  return trace;
}

}  // namespace deal
