#include "deal/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "deal/errors.hpp"

namespace deal {

void DealConfig::validate() const {
  if (!(eps > 0.0)) throw UsageError("eps must be positive");
  if (max_iter < 0) throw UsageError("max_iter must be nonnegative");
  if (!(armijo.sigma > 0.0 && armijo.sigma < 1.0)) throw UsageError("Armijo sigma must lie in (0, 1)");
  if (!(armijo.eta > 0.0 && armijo.eta < 1.0)) throw UsageError("Armijo eta must lie in (0, 1)");
  if (!(armijo.alpha_bar > 0.0)) throw UsageError("Armijo alpha_bar must be positive");
  if (armijo.max_backtracks < 0) throw UsageError("max_backtracks must be nonnegative");
  if (alpha_override && !(*alpha_override > 0.0)) throw UsageError("step size override must be positive");
}

double dealc_step_size(double c1, double c2, double nu, double L) {
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(L > 0.0)) throw UsageError("c1, c2 and L must be positive");
  if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("nu must lie in (0, 1]");
  return std::pow(c1 / (std::pow(c2, 1.0 + nu) * L), 1.0 / nu);
}

ArmijoBound armijo_bound(double nu, double sigma, double eta, double c1, double c2, double L, double alpha_bar) {
  if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("nu must lie in (0, 1]");
  if (!(sigma > 0.0 && sigma < 1.0) || !(eta > 0.0 && eta < 1.0)) throw UsageError("sigma and eta must lie in (0, 1)");
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(L > 0.0) || !(alpha_bar > 0.0)) {
    throw UsageError("c1, c2, L and alpha_bar must be positive");
  }
  ArmijoBound b;
  b.c_bar = std::pow((1.0 + nu) * (1.0 - sigma) * c1 / (L * std::pow(alpha_bar, nu) * std::pow(c2, 1.0 / nu)),
                     1.0 / nu);
  b.p_bar = 1.0 + std::log(b.c_bar) / std::log(eta);
  b.alpha_tilde = std::pow(eta, b.p_bar) * alpha_bar;
  return b;
}

namespace {

const HolderInfo& require_holder(const SmoothObjective& objective) {
  if (!objective.holder) throw CapabilityError("solver needs Hoelder constants (nu, L) on the objective");
  return *objective.holder;
}

struct Point {
  Vector x;
  double f;
  Vector g;
};

Point evaluate(const SmoothObjective& obj, Vector x) {
  auto [f, g] = obj.evaluate(x);
  return {std::move(x), f, std::move(g)};
}

bool finite_point(const Point& p) { return std::isfinite(p.f) && p.g.allFinite(); }

IterateRecord make_record(std::int64_t k, const Point& p, bool store) {
  IterateRecord r;
  r.k = k;
  r.f = p.f;
  r.grad_norm = p.g.norm();
  if (store) r.x = p.x;
  return r;
}

void start_trace(IterateTrace& trace, const std::string& id, const DealConfig& cfg) {
  trace.solver_id = id;
  trace.seed = cfg.seed;
  trace.config_digest = cfg.config_digest;
}

}  // namespace

IterateTrace run_dealc(const SmoothObjective& objective, const Vector& x0, const DealConfig& config) {
  config.validate();
  const HolderInfo h = require_holder(objective);
  DirectionRule rule(config.direction);
  const double c1 = config.direction.c1, c2 = config.direction.c2;
  const double beta = rule.resolve_beta(h.nu);
  const double alpha = config.alpha_override ? *config.alpha_override : dealc_step_size(c1, c2, h.nu, h.L);

  IterateTrace trace;
  start_trace(trace, "deal-c", config);
  trace.theta = 1.0 + 1.0 / h.nu;
  trace.rho = c1 * alpha * h.nu / (1.0 + h.nu);
  if (config.alpha_override) {
    const double general = alpha * (c1 - std::pow(c2, 1.0 + h.nu) * h.L * std::pow(alpha, h.nu) / (1.0 + h.nu));
    if (general > 0.0) trace.rho = general;
  }
  trace.displacement_c = c2 * alpha;
  trace.heuristic = rule.heuristic(h.nu) || config.alpha_override.has_value();
  trace.params = {{"alpha", alpha}, {"beta", beta}, {"nu", h.nu}, {"L", h.L}, {"c1", c1}, {"c2", c2}};

  Point cur = evaluate(objective, x0);
  if (!finite_point(cur)) throw NumericalError("objective is not finite at the starting point");
  for (std::int64_t k = 0;; ++k) {
    trace.records.push_back(make_record(k, cur, config.store_iterates));
    if (trace.records.back().grad_norm <= config.eps) {
      trace.termination = "tolerance";
      break;
    }
    if (k >= config.max_iter) {
      trace.termination = "max_iter";
      break;
    }
    const Vector d = rule.direction(cur.x, cur.g, beta);
    Point next = evaluate(objective, cur.x + alpha * d);
    if (!finite_point(next)) {
      trace.termination = "nonfinite";
      break;
    }
    auto& rec = trace.records.back();
    rec.step = alpha;
    rec.displacement = (next.x - cur.x).norm();
    cur = std::move(next);
  }
  trace.fallbacks = rule.fallback_count();
  trace.x_final = cur.x;
  return trace;
}

IterateTrace run_deala(const SmoothObjective& objective, const Vector& x0, const DealConfig& config) {
  config.validate();
  const HolderInfo h = require_holder(objective);
  DirectionRule rule(config.direction);
  const auto& a = config.armijo;
  const double c1 = config.direction.c1, c2 = config.direction.c2;
  const double beta = rule.resolve_beta(h.nu);
  const ArmijoBound bound = armijo_bound(h.nu, a.sigma, a.eta, c1, c2, h.L, a.alpha_bar);
  // Step floor from the Hoelder descent lemma with ||d||^{1+nu} <= c2^{1+nu} ||g||^{2+beta};
  // coincides with the bound above when c2 = 1.
  const double floor_direct =
      std::min(a.alpha_bar,
               a.eta * std::pow((1.0 + h.nu) * (1.0 - a.sigma) * c1 / (h.L * std::pow(c2, 1.0 + h.nu)), 1.0 / h.nu));
  const double alpha_floor = std::min({bound.alpha_tilde, a.alpha_bar, floor_direct});

  IterateTrace trace;
  start_trace(trace, "deal-a", config);
  trace.theta = 1.0 + 1.0 / h.nu;
  trace.rho = a.sigma * alpha_floor * c1;
  trace.displacement_c = c2 * a.alpha_bar;
  trace.heuristic = rule.heuristic(h.nu);
  trace.params = {{"alpha_bar", a.alpha_bar}, {"sigma", a.sigma},         {"eta", a.eta},
                  {"beta", beta},             {"nu", h.nu},               {"L", h.L},
                  {"c1", c1},                 {"c2", c2},                 {"c_bar", bound.c_bar},
                  {"p_bar", bound.p_bar},     {"alpha_tilde", bound.alpha_tilde}};

  Point cur = evaluate(objective, x0);
  if (!finite_point(cur)) throw NumericalError("objective is not finite at the starting point");
  for (std::int64_t k = 0;; ++k) {
    trace.records.push_back(make_record(k, cur, config.store_iterates));
    if (trace.records.back().grad_norm <= config.eps) {
      trace.termination = "tolerance";
      break;
    }
    if (k >= config.max_iter) {
      trace.termination = "max_iter";
      break;
    }
    const Vector d = rule.direction(cur.x, cur.g, beta);
    const double slope = cur.g.dot(d);
    int p = 0;
    double alpha = a.alpha_bar;
    std::optional<Point> accepted;
    for (;;) {
      Point trial = evaluate(objective, cur.x + alpha * d);
      if (finite_point(trial) && trial.f <= cur.f + a.sigma * alpha * slope) {
        accepted = std::move(trial);
        break;
      }
      if (p >= a.max_backtracks) break;
      ++p;
      alpha = a.alpha_bar * std::pow(a.eta, p);
    }
    auto& rec = trace.records.back();
    rec.inner_count = p;
    if (!accepted) {
      trace.termination = "backtrack_limit";
      break;
    }
    rec.step = alpha;
    rec.displacement = (accepted->x - cur.x).norm();
    cur = std::move(*accepted);
  }
  trace.fallbacks = rule.fallback_count();
  trace.x_final = cur.x;
  return trace;
}

}  // namespace deal
