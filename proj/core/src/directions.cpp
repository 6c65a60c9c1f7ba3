#include "deal/directions.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "deal/errors.hpp"

namespace deal {

DirectionKind parse_direction_kind(const std::string& name) {
  if (name == "zero" || name == "none") return DirectionKind::zero;
  if (name == "grad" || name == "gradient") return DirectionKind::gradient;
  if (name == "bb1") return DirectionKind::bb1;
  if (name == "bb2") return DirectionKind::bb2;
  if (name == "lbfgs") return DirectionKind::lbfgs;
  throw UsageError("unknown direction '" + name + "' (zero, grad, bb1, bb2, lbfgs)");
}

std::string to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::zero: return "zero";
    case DirectionKind::gradient: return "grad";
    case DirectionKind::bb1: return "bb1";
    case DirectionKind::bb2: return "bb2";
    case DirectionKind::lbfgs: return "lbfgs";
  }
  return "unknown";
}

DirectionOptions DirectionOptions::defaults(DirectionKind kind) {
  DirectionOptions o;
  o.kind = kind;
  if (kind == DirectionKind::bb1 || kind == DirectionKind::bb2 || kind == DirectionKind::lbfgs) {
    o.c1 = o.alpha_min;
    o.c2 = o.alpha_max;
  }
  return o;
}

DirectionRule::DirectionRule(DirectionOptions options) : options_(std::move(options)) {
  if (!(options_.c1 > 0.0) || !(options_.c2 > 0.0)) throw UsageError("c1 and c2 must be positive");
  if (options_.c1 > options_.c2) throw UsageError("c1 cannot exceed c2");
  if (!(options_.alpha_min > 0.0) || !(options_.alpha_min <= options_.alpha_max)) {
    throw UsageError("BB safeguard needs 0 < alpha_min <= alpha_max");
  }
  if (options_.memory < 1) throw UsageError("L-BFGS memory must be at least 1");
  if (options_.beta && !(*options_.beta > -1.0)) throw UsageError("beta must exceed -1");
}

void DirectionRule::reset() {
  prev_x_.reset();
  prev_g_.reset();
  last_s_.reset();
  last_y_.reset();
  pairs_.clear();
  last_fallback_ = false;
  fallbacks_ = 0;
}

Vector DirectionRule::fallback(const Vector& grad) {
  last_fallback_ = true;
  ++fallbacks_;
  return -grad;
}

Vector DirectionRule::base_direction(const Vector& x, const Vector& grad) {
  last_fallback_ = false;
  if (options_.kind == DirectionKind::zero) return Vector::Zero(grad.size());
  if (grad.squaredNorm() == 0.0) throw UsageError("descent direction requested at a zero gradient");

  bool have_pair = false;
  if (prev_x_) {
    last_s_ = x - *prev_x_;
    last_y_ = grad - *prev_g_;
    have_pair = true;
  }
  prev_x_ = x;
  prev_g_ = grad;

  switch (options_.kind) {
    case DirectionKind::gradient: return -grad;
    case DirectionKind::bb1:
    case DirectionKind::bb2: {
      if (!have_pair) return -grad;
      const auto a = bb_scaling(*last_s_, *last_y_, options_.kind);
      if (!a) return fallback(grad);
      const double lo = std::max(options_.alpha_min, options_.c1);
      const double hi = std::min(options_.alpha_max, options_.c2);
      return -std::clamp(*a, lo, hi) * grad;
    }
    case DirectionKind::lbfgs: {
      if (!have_pair) return -grad;
      if (!(last_s_->dot(*last_y_) > 0.0)) return fallback(grad);
      pairs_.emplace_back(*last_s_, *last_y_);
      while (pairs_.size() > static_cast<std::size_t>(options_.memory)) pairs_.pop_front();
      Vector d = lbfgs_direction(grad);
      if (!d.allFinite() || !validate_sufficient_descent(d, grad, options_.c1, options_.c2).passed) {
        return fallback(grad);
      }
      return d;
    }
    case DirectionKind::zero: break;
  }
  return -grad;
}

Vector DirectionRule::lbfgs_direction(const Vector& grad) const {
  Vector q = grad;
  std::vector<double> alpha(pairs_.size());
  for (std::size_t i = pairs_.size(); i-- > 0;) {
    const auto& [s, y] = pairs_[i];
    alpha[i] = s.dot(q) / s.dot(y);
    q -= alpha[i] * y;
  }
  const auto& [s_last, y_last] = pairs_.back();
  Vector r = (s_last.dot(y_last) / y_last.squaredNorm()) * q;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& [s, y] = pairs_[i];
    const double b = y.dot(r) / s.dot(y);
    r += (alpha[i] - b) * s;
  }
  return -r;
}

Vector DirectionRule::direction(const Vector& x, const Vector& grad, double beta) {
  return generalize(base_direction(x, grad), grad, beta);
}

double DirectionRule::resolve_beta(double nu) const {
  if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("nu must lie in (0, 1]");
  return options_.beta ? *options_.beta : (1.0 - nu) / nu;
}

bool DirectionRule::heuristic(double nu) const {
  if (!options_.beta) return false;
  return std::abs(*options_.beta - (1.0 - nu) / nu) > 1e-12;
}

std::optional<double> bb_scaling(const Vector& s, const Vector& y, DirectionKind kind) {
  const double sy = s.dot(y);
  if (!(sy > 0.0)) return std::nullopt;
  if (kind == DirectionKind::bb1) return s.squaredNorm() / sy;
  if (kind == DirectionKind::bb2) return sy / y.squaredNorm();
  throw UsageError("bb_scaling needs kind bb1 or bb2");
}

Vector generalize(const Vector& dbar, const Vector& grad, double beta) {
  if (!(beta > -1.0)) throw UsageError("beta must exceed -1");
  if (beta == 0.0) return dbar;
  const double ng = grad.norm();
  if (ng == 0.0) {
    if (beta < 0.0) throw UsageError("negative beta needs a nonzero gradient");
    return Vector::Zero(dbar.size());
  }
  return std::pow(ng, beta) * dbar;
}

DescentCheck validate_sufficient_descent(const Vector& dbar, const Vector& grad, double c1, double c2) {
  DescentCheck out;
  const double g2 = grad.squaredNorm();
  if (g2 == 0.0) return out;
  out.c1_measured = -grad.dot(dbar) / g2;
  out.c2_measured = dbar.norm() / std::sqrt(g2);
  constexpr double slack = 1e-12;
  out.passed = out.c1_measured >= c1 * (1.0 - slack) && out.c2_measured <= c2 * (1.0 + slack);
  return out;
}

}  // namespace deal
