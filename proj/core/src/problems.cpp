#include "deal/problems.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "json.hpp"

#include "deal/envelopes.hpp"
#include "deal/errors.hpp"
#include "deal/oracles.hpp"
#include "deal/rng.hpp"
#include "deal/trace_io.hpp"

namespace deal {
namespace {

void require_finite(const Matrix& A, const char* what) {
  if (!A.allFinite()) throw DataError(std::string(what) + " has non-finite entries");
}

void check_dim(const Vector& x, Eigen::Index n) {
  if (x.size() != n) {
    throw UsageError("point has dimension " + std::to_string(x.size()) + ", problem expects " + std::to_string(n));
  }
}

constexpr double kRankTol = 1e-10;

}  // namespace

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "leastp") return ProblemKind::leastp;
  if (name == "lasso") return ProblemKind::lasso;
  if (name == "power_abs" || name == "powerabs") return ProblemKind::power_abs;
  if (name == "quadratic") return ProblemKind::quadratic;
  throw UsageError("unknown problem kind '" + name + "' (leastp, lasso, power_abs, quadratic)");
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::leastp: return "leastp";
    case ProblemKind::lasso: return "lasso";
    case ProblemKind::power_abs: return "power_abs";
    case ProblemKind::quadratic: return "quadratic";
  }
  return "unknown";
}

ProblemKind kind_of(const Problem& problem) { return static_cast<ProblemKind>(problem.index()); }

LeastPProblem make_leastp(Matrix A, Vector b, double p) {
  if (!(p > 1.0 && p <= 2.0)) throw UsageError("least-p exponent must lie in (1, 2]");
  if (A.rows() != b.size()) throw UsageError("A and b have inconsistent row counts");
  if (A.rows() < A.cols()) throw UsageError("least-p needs m >= n for full column rank");
  require_finite(A, "A");
  require_finite(b, "b");
  LeastPProblem pr;
  const auto sc = oracle::spectral_constants(A);
  if (sc.sigma_min < kRankTol) throw UsageError("least-p matrix is rank deficient");
  pr.sigma_min = sc.sigma_min;
  pr.opnorm = sc.opnorm;
  pr.x_ls = A.colPivHouseholderQr().solve(b);
  pr.p = p;
  pr.A = std::move(A);
  pr.b = std::move(b);
  const Vector Ax = pr.A * pr.x_ls;
  pr.fstar = std::pow((Ax - pr.b).norm(), p) / p;
  return pr;
}

LassoProblem make_lasso(Matrix A, Vector b, double lambda) {
  if (!(lambda > 0.0)) throw UsageError("lasso weight lambda must be positive");
  if (A.rows() != b.size()) throw UsageError("A and b have inconsistent row counts");
  require_finite(A, "A");
  require_finite(b, "b");
  LassoProblem pr;
  pr.L = std::pow(oracle::spectral_constants(A).opnorm, 2);
  pr.A = std::move(A);
  pr.b = std::move(b);
  pr.lambda = lambda;
  return pr;
}

PowerAbsProblem make_power_abs(double s, std::size_t n) {
  if (!(s > 1.0) || !std::isfinite(s)) throw UsageError("power exponent s must exceed 1");
  if (n == 0) throw UsageError("dimension must be at least 1");
  return {s, n};
}

QuadraticProblem make_quadratic(Matrix Q, Vector c) {
  if (Q.rows() != Q.cols() || Q.rows() != c.size()) throw UsageError("Q must be square and match c");
  require_finite(Q, "Q");
  require_finite(c, "c");
  if (!Q.isApprox(Q.transpose(), 1e-12)) throw UsageError("Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double L = ev(ev.size() - 1);
  if (ev(0) < -1e-12 * std::max(1.0, std::abs(L))) throw UsageError("Q must be positive semidefinite");
  QuadraticProblem pr;
  pr.Q = std::move(Q);
  pr.c = std::move(c);
  pr.L = L;
  pr.mu = std::max(ev(0), 0.0);
  return pr;
}

std::pair<double, Vector> leastp_value_grad(const LeastPProblem& problem, const Vector& x) {
  check_dim(x, problem.A.cols());
  const Vector Ax = problem.A * x;
  const Vector r = Ax - problem.b;
  const double nr = r.norm();
  const double value = std::pow(nr, problem.p) / problem.p;
  if (nr == 0.0) return {value, Vector::Zero(x.size())};
  return {value, std::pow(nr, problem.p - 2.0) * (problem.A.transpose() * r)};
}

LeastPConstants leastp_constants(const LeastPProblem& problem) {
  if (!(problem.sigma_min > 0.0) || !(problem.opnorm > 0.0)) throw UsageError("least-p constants need cached spectra");
  const double p = problem.p;
  LeastPConstants c;
  c.nu = p - 1.0;
  c.L = std::pow(2.0, 2.0 - p) * std::pow(problem.opnorm, p);
  c.vartheta = 1.0 - 1.0 / p;
  c.tau = 1.0 / (problem.sigma_min * std::pow(p, 1.0 - 1.0 / p));
  return c;
}

std::pair<double, Vector> lasso_smooth_value_grad(const LassoProblem& problem, const Vector& x) {
  check_dim(x, problem.A.cols());
  const Vector Ax = problem.A * x;
  const Vector r = Ax - problem.b;
  return {0.5 * r.squaredNorm(), problem.A.transpose() * r};
}

double lasso_value(const LassoProblem& problem, const Vector& x) {
  return lasso_smooth_value_grad(problem, x).first + problem.lambda * x.lpNorm<1>();
}

KLInfo power_abs_kl(const PowerAbsProblem& problem) {
  const double s = problem.s;
  double tau = 1.0 / s;
  if (s >= 2.0) {
    const double q = s / (s - 1.0);
    tau = std::pow(static_cast<double>(problem.n), 1.0 / q - 0.5) / s;
  }
  return make_kl(1.0 - 1.0 / s, tau);
}

SmoothObjective to_objective(const LeastPProblem& problem) {
  auto pr = std::make_shared<const LeastPProblem>(problem);
  SmoothObjective obj;
  obj.dim = static_cast<std::size_t>(problem.A.cols());
  obj.value_grad = [pr](const Vector& x) { return leastp_value_grad(*pr, x); };
  obj.value = [pr](const Vector& x) { return leastp_value_grad(*pr, x).first; };
  obj.gradient = [pr](const Vector& x) { return leastp_value_grad(*pr, x).second; };
  if (problem.p == 2.0) {
    obj.hessian_apply = [pr](const Vector&, const Vector& v) -> Vector {
      return pr->A.transpose() * (pr->A * v);
    };
  }
  const auto c = leastp_constants(problem);
  obj.holder = make_holder(c.nu, c.L);
  if (problem.consistent || problem.A.rows() == problem.A.cols()) obj.kl = make_kl(c.vartheta, c.tau);
  obj.fstar = problem.fstar;
  return obj;
}

SmoothObjective to_objective(const QuadraticProblem& problem) {
  auto pr = std::make_shared<const QuadraticProblem>(problem);
  SmoothObjective obj;
  obj.dim = static_cast<std::size_t>(problem.Q.rows());
  obj.value_grad = [pr](const Vector& x) {
    check_dim(x, pr->Q.rows());
    const Vector Qx = pr->Q * x;
    return std::make_pair(0.5 * x.dot(Qx) + pr->c.dot(x), Vector(Qx + pr->c));
  };
  obj.value = [vg = obj.value_grad](const Vector& x) { return vg(x).first; };
  obj.gradient = [vg = obj.value_grad](const Vector& x) { return vg(x).second; };
  obj.hessian_apply = [pr](const Vector&, const Vector& v) -> Vector { return pr->Q * v; };
  if (problem.L > 0.0) obj.holder = make_holder(1.0, problem.L);
  if (problem.mu > 0.0) {
    obj.kl = make_kl(0.5, 1.0 / std::sqrt(2.0 * problem.mu));
    const Vector xs = -problem.Q.llt().solve(problem.c);
    obj.fstar = 0.5 * problem.c.dot(xs);
  }
  return obj;
}

CompositeObjective to_composite(const LassoProblem& problem) {
  auto pr = std::make_shared<const LassoProblem>(problem);
  CompositeObjective obj;
  obj.smooth.dim = static_cast<std::size_t>(problem.A.cols());
  obj.smooth.value_grad = [pr](const Vector& x) { return lasso_smooth_value_grad(*pr, x); };
  obj.smooth.value = [pr](const Vector& x) { return lasso_smooth_value_grad(*pr, x).first; };
  obj.smooth.gradient = [pr](const Vector& x) { return lasso_smooth_value_grad(*pr, x).second; };
  obj.smooth.hessian_apply = [pr](const Vector&, const Vector& v) -> Vector {
    return pr->A.transpose() * (pr->A * v);
  };
  obj.smooth.holder = make_holder(1.0, problem.L);
  obj.nonsmooth = l1_norm(problem.lambda);
  return obj;
}

ProxCapable to_prox_capable(const PowerAbsProblem& problem) {
  const double s = problem.s;
  return separable_function([s](double t) { return std::pow(std::abs(t), s); }, "power_abs");
}

GeneratedProblem generate_problem(std::uint64_t seed, ProblemKind kind, std::size_t m, std::size_t n,
                                  const ProblemParams& params) {
  if (n == 0) throw UsageError("dimension n must be at least 1");
  const auto M = static_cast<Eigen::Index>(m), N = static_cast<Eigen::Index>(n);
  GeneratedProblem out;
  if (kind == ProblemKind::power_abs) {
    out.problem = make_power_abs(params.s, n);
    out.seed_used = seed;
    return out;
  }
  if (m == 0) throw UsageError("sample count m must be at least 1");
  if (kind == ProblemKind::leastp && m < n) throw UsageError("least-p needs m >= n");
  if (kind == ProblemKind::leastp && !(params.p > 1.0 && params.p <= 2.0)) {
    throw UsageError("least-p exponent must lie in (1, 2]");
  }
  for (std::uint64_t s = seed;; ++s) {
    if (out.regenerations > 100) throw NumericalError("could not draw a full-rank matrix");
    Rng rng(s);
    Matrix A = rng.normal_matrix(M, N);
    switch (kind) {
      case ProblemKind::leastp: {
        Vector x_true;
        Vector b;
        if (params.consistent) {
          x_true = rng.normal_vector(N);
          b = A * x_true;
        } else {
          b = rng.normal_vector(M);
        }
        LeastPProblem pr;
        try {
          pr = make_leastp(std::move(A), std::move(b), params.p);
        } catch (const UsageError&) {
          ++out.regenerations;
          continue;
        }
        if (params.consistent) {
          pr.x_ls = x_true;
          pr.fstar = 0.0;
          pr.consistent = true;
        }
        pr.seed = s;
        out.problem = std::move(pr);
        break;
      }
      case ProblemKind::lasso: {
        Vector b = rng.normal_vector(M);
        LassoProblem pr = make_lasso(std::move(A), std::move(b), params.lambda);
        pr.seed = s;
        out.problem = std::move(pr);
        break;
      }
      case ProblemKind::quadratic: {
        Matrix Q = A.transpose() * A / static_cast<double>(m);
        Q = 0.5 * (Q + Q.transpose()).eval();
        Vector c = rng.normal_vector(N);
        QuadraticProblem pr = make_quadratic(std::move(Q), std::move(c));
        pr.seed = s;
        out.problem = std::move(pr);
        break;
      }
      case ProblemKind::power_abs: break;
    }
    out.seed_used = s;
    return out;
  }
}

namespace {

ReferenceOptimum lasso_reference(const LassoProblem& pr) {
  const Eigen::Index n = pr.A.cols();
  const Matrix AtA = pr.A.transpose() * pr.A;
  const Vector Atb = pr.A.transpose() * pr.b;
  const double step = 1.0 / pr.L;
  Vector x = Vector::Zero(n);
  bool converged = false;
  for (int it = 0; it < 1000000; ++it) {
    const Vector xn = prox_l1(x - step * (AtA * x - Atb), step * pr.lambda);
    const double move = (xn - x).norm();
    x = xn;
    if (move <= 1e-12 * std::max(1.0, x.norm())) {
      converged = true;
      break;
    }
  }
  ReferenceOptimum out;
  out.method = "proximal_gradient";
  // Polish on the detected support by solving the reduced optimality system.
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < n; ++i)
    if (x(i) != 0.0) support.push_back(i);
  if (!support.empty()) {
    const auto k = static_cast<Eigen::Index>(support.size());
    Matrix S(k, k);
    Vector rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      rhs(a) = Atb(support[a]) - pr.lambda * (x(support[a]) > 0 ? 1.0 : -1.0);
      for (Eigen::Index c = 0; c < k; ++c) S(a, c) = AtA(support[a], support[c]);
    }
    Eigen::LDLT<Matrix> ldlt(S);
    if (ldlt.info() == Eigen::Success) {
      const Vector xs = ldlt.solve(rhs);
      Vector cand = Vector::Zero(n);
      bool signs_ok = true;
      for (Eigen::Index a = 0; a < k; ++a) {
        cand(support[a]) = xs(a);
        if ((xs(a) > 0) != (x(support[a]) > 0)) signs_ok = false;
      }
      const Vector grad = AtA * cand - Atb;
      bool kkt = signs_ok;
      for (Eigen::Index i = 0; i < n && kkt; ++i)
        if (cand(i) == 0.0 && std::abs(grad(i)) > pr.lambda * (1.0 + 1e-9)) kkt = false;
      if (kkt && lasso_value(pr, cand) <= lasso_value(pr, x)) {
        x = cand;
        out.method = "proximal_gradient+support_solve";
        converged = true;
      }
    }
  }
  out.fstar = lasso_value(pr, x);
  out.xstar = x;
  out.low_confidence = !converged;
  return out;
}

}  // namespace

ReferenceOptimum reference_optimum(const Problem& problem) {
  return std::visit(
      [](const auto& pr) -> ReferenceOptimum {
        using T = std::decay_t<decltype(pr)>;
        ReferenceOptimum out;
        if constexpr (std::is_same_v<T, LeastPProblem>) {
          out.fstar = pr.fstar;
          out.xstar = pr.x_ls;
          out.method = pr.consistent ? "consistent" : "least_squares";
        } else if constexpr (std::is_same_v<T, LassoProblem>) {
          out = lasso_reference(pr);
        } else if constexpr (std::is_same_v<T, PowerAbsProblem>) {
          out.fstar = 0.0;
          out.xstar = Vector::Zero(static_cast<Eigen::Index>(pr.n));
          out.method = "closed_form";
        } else {
          const auto cod = pr.Q.completeOrthogonalDecomposition();
          const Vector xs = -cod.solve(pr.c);
          if ((pr.Q * xs + pr.c).norm() > 1e-8 * std::max(1.0, pr.c.norm())) {
            throw DomainError("quadratic is unbounded below");
          }
          out.xstar = xs;
          out.fstar = 0.5 * pr.c.dot(xs);
          out.method = "closed_form";
          out.low_confidence = !(pr.mu > 0.0);
        }
        return out;
      },
      problem);
}

namespace {
std::string data_digest(const Matrix& A, const Vector& b) {
  std::string text;
  text.reserve(static_cast<std::size_t>(A.size() + b.size()) * 24);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) text += format_double(A(i, j)) + ',';
  for (Eigen::Index i = 0; i < b.size(); ++i) text += format_double(b(i)) + ',';
  return fnv1a_hex(text);
}
}  // namespace

std::string problem_descriptor_json(const Problem& problem, const ProblemParams& params) {
  nlohmann::json j;
  j["kind"] = to_string(kind_of(problem));
  std::visit(
      [&](const auto& pr) {
        using T = std::decay_t<decltype(pr)>;
        if constexpr (std::is_same_v<T, LeastPProblem>) {
          j["m"] = pr.A.rows();
          j["n"] = pr.A.cols();
          j["seed"] = pr.seed;
          j["params"] = {{"p", pr.p}, {"consistent", pr.consistent}};
          const auto c = leastp_constants(pr);
          j["constants"] = {{"sigma_min", pr.sigma_min}, {"opnorm", pr.opnorm}, {"fstar", pr.fstar},
                            {"nu", c.nu}, {"L", c.L}, {"vartheta", c.vartheta}, {"tau", c.tau}};
          j["data_digest"] = data_digest(pr.A, pr.b);
        } else if constexpr (std::is_same_v<T, LassoProblem>) {
          j["m"] = pr.A.rows();
          j["n"] = pr.A.cols();
          j["seed"] = pr.seed;
          j["params"] = {{"lambda", pr.lambda}};
          j["constants"] = {{"L", pr.L}};
          j["data_digest"] = data_digest(pr.A, pr.b);
        } else if constexpr (std::is_same_v<T, PowerAbsProblem>) {
          j["n"] = pr.n;
          j["params"] = {{"s", pr.s}};
          const auto kl = power_abs_kl(pr);
          j["constants"] = {{"vartheta", kl.vartheta}, {"tau", kl.tau}, {"fstar", 0.0}};
        } else {
          j["n"] = pr.Q.rows();
          j["seed"] = pr.seed;
          j["params"] = nlohmann::json::object();
          j["constants"] = {{"L", pr.L}, {"mu", pr.mu}};
          j["data_digest"] = data_digest(pr.Q, pr.c);
        }
      },
      problem);
  j["generator"] = {{"p", params.p}, {"lambda", params.lambda}, {"s", params.s}, {"consistent", params.consistent}};
  return j.dump(2);
}

}  // namespace deal
