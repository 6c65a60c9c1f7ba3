#include "deal/objective.hpp"

#include <cmath>

#include "deal/errors.hpp"

namespace deal {

HolderInfo make_holder(double nu, double L) {
  if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("Hoelder exponent nu must lie in (0, 1]");
  if (!(L > 0.0) || !std::isfinite(L)) throw UsageError("Hoelder constant L must be positive");
  return {nu, L};
}

KLInfo make_kl(double vartheta, double tau) {
  if (!(vartheta > 0.0 && vartheta < 1.0)) throw UsageError("KL exponent must lie in (0, 1)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw UsageError("KL constant tau must be positive");
  return {vartheta, tau};
}

bool all_finite(const Vector& v) { return v.allFinite(); }

std::pair<double, Vector> SmoothObjective::evaluate(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw UsageError("point has dimension " + std::to_string(x.size()) + ", objective expects " +
                     std::to_string(dim));
  }
  if (value_grad) return value_grad(x);
  return {value(x), gradient(x)};
}

double CompositeObjective::lipschitz() const {
  if (!smooth.holder || smooth.holder->nu != 1.0) {
    throw CapabilityError("composite objective needs a Lipschitz gradient (nu = 1) for the smooth part");
  }
  return smooth.holder->L;
}

void validate_constants(double rho, double theta) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw UsageError("rho must be positive and finite");
  if (!(theta > 1.0) || !std::isfinite(theta)) throw UsageError("theta must exceed 1");
}

}  // namespace deal
