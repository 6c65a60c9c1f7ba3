#pragma once

#include <functional>
#include <optional>
#include <string>

#include "deal/objective.hpp"

namespace deal {

/// Componentwise soft threshold sign(x_i) max(|x_i| - w, 0).
Vector prox_l1(const Vector& x, double w);

/// High-order prox of a separable g = sum_i g_scalar(y_i):
/// argmin_y { g(y) + ||x - y||^p / (p gamma) }.
///
/// Solved per coordinate by bracketed golden section with multi-start, which
/// is exact when p == 2 or x has one coordinate. Other cases throw
/// CapabilityError. Ties between local minimizers set multi_valued.
ProxResult prox_home_separable(const std::function<double(double)>& g_scalar, const Vector& x,
                               double gamma, double p);

struct EnvelopeEval {
  Vector x;
  Vector prox_point;
  double value = 0.0;
  /// Empty when the prox is multi-valued at x (the envelope is not
  /// differentiable there).
  std::optional<Vector> gradient;
  bool multi_valued = false;
};

/// Value and gradient of the high-order Moreau envelope
/// g^p_gamma(x) = min_y { g(y) + ||x - y||^p / (p gamma) }, with
/// grad = ||x - y*||^{p-2} (x - y*) / gamma.
EnvelopeEval home_value_grad(const ProxCapable& g, const Vector& x, double gamma, double p);

/// T_gamma(x) = prox_{gamma g}(x - gamma grad f(x)). Requires gamma < 1/L.
Vector forward_backward_map(const CompositeObjective& problem, const Vector& x, double gamma);

/// Forward-backward envelope value only (no Hessian needed).
double fbe_value(const CompositeObjective& problem, const Vector& x, double gamma);

/// Forward-backward envelope: value at y = T_gamma(x) plugged into the
/// partial linearization, gradient (I - gamma H)(x - T_gamma(x)) / gamma.
/// Throws CapabilityError without a Hessian-apply oracle.
EnvelopeEval fbe_value_grad(const CompositeObjective& problem, const Vector& x, double gamma);

/// lambda ||x||_1; closed-form prox for p == 2.
ProxCapable l1_norm(double lambda);
/// sum_i scalar(x_i), prox through prox_home_separable.
ProxCapable separable_function(std::function<double(double)> scalar, std::string name);
/// g == 0; prox is the identity.
ProxCapable zero_function();

/// The envelope as a smooth objective (for certificates and oracles).
SmoothObjective fbe_objective(const CompositeObjective& problem, double gamma);
SmoothObjective home_objective(const ProxCapable& g, double gamma, double p, std::size_t dim);

}  // namespace deal
