#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace deal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Exponent and constant of a nu-Hoelder continuous gradient.
struct HolderInfo {
  double nu = 1.0;
  double L = 1.0;
};

/// Exponent and constant of the global KL inequality
/// (f(x) - f*)^vartheta <= tau * ||grad f(x)||.
struct KLInfo {
  double vartheta = 0.5;
  double tau = 1.0;
};

HolderInfo make_holder(double nu, double L);
KLInfo make_kl(double vartheta, double tau);

bool all_finite(const Vector& v);

/// First-order oracle for a smooth function on R^n.
///
/// `value_grad` is optional and, when set, is used by solvers to share work
/// between the value and the gradient. Oracles must be re-entrant.
struct SmoothObjective {
  std::size_t dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<std::pair<double, Vector>(const Vector&)> value_grad;
  std::function<Vector(const Vector&, const Vector&)> hessian_apply;
  std::optional<HolderInfo> holder;
  std::optional<KLInfo> kl;
  std::optional<double> fstar;

  bool has_hessian() const { return static_cast<bool>(hessian_apply); }
  std::pair<double, Vector> evaluate(const Vector& x) const;
};

struct ProxResult {
  Vector point;
  bool multi_valued = false;
};

/// A (possibly nonsmooth) function that exposes a high-order prox oracle
/// (x, gamma, p) -> argmin_y { g(y) + ||x - y||^p / (p gamma) }.
struct ProxCapable {
  std::string name;
  std::function<double(const Vector&)> value;
  std::function<ProxResult(const Vector&, double gamma, double p)> prox;
  /// Component oracle when the function is a sum of identical scalar terms.
  std::function<double(double)> scalar;
  bool closed_form = false;
  bool separable = false;
};

/// phi = f + g with f smooth (Lipschitz gradient) and g prox-capable.
struct CompositeObjective {
  SmoothObjective smooth;
  ProxCapable nonsmooth;
  /// Weak-convexity modulus of g; 0 means convex.
  double weak_convexity = 0.0;
  std::optional<double> fstar;

  double value(const Vector& x) const { return smooth.value(x) + nonsmooth.value(x); }
  /// Lipschitz constant of grad f; requires smooth.holder with nu == 1.
  double lipschitz() const;
};

struct IterateRecord {
  std::int64_t k = 0;
  double f = 0.0;
  /// ||grad f(x^k)||, or the envelope gradient norm for envelope solvers.
  double grad_norm = 0.0;
  /// Step size taken from x^k to x^{k+1} (0 on the final record).
  double step = 0.0;
  /// Backtracking / line-search trials spent on the step out of x^k.
  int inner_count = 0;
  /// ||x^{k+1} - x^k||; empty on the final record.
  std::optional<double> displacement;
  /// Iterate, present only when the run stores iterates.
  std::optional<Vector> x;
};

/// Per-iteration log of a solver run plus the constants it certifies.
struct IterateTrace {
  std::vector<IterateRecord> records;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string solver_id;
  /// Certified DEAL constants: f(x^{k+1}) <= f(x^k) - rho ||grad f(x^k)||^theta.
  double rho = 0.0;
  double theta = 2.0;
  /// Displacement constant c with ||x^{k+1} - x^k|| <= c ||grad f(x^k)||^{theta-1}.
  std::optional<double> displacement_c;
  /// Run used a parameter outside the guaranteed regime (heuristic beta, overridden step).
  bool heuristic = false;
  /// Hoelder / Lipschitz constants were estimated rather than known.
  bool constants_estimated = false;
  /// "tolerance", "max_iter", "nonfinite", "backtrack_limit", "multi_valued".
  std::string termination;
  /// Times a boosted solver fell back to the unboosted envelope step.
  int fallbacks = 0;
  /// Solver-specific constants (alpha, p_bar, alpha_tilde, gamma, ...).
  std::map<std::string, double> params;
  std::optional<Vector> x_final;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  bool converged() const { return termination == "tolerance"; }
};

/// Throws UsageError unless rho > 0 and theta > 1.
void validate_constants(double rho, double theta);

}  // namespace deal
