#include "deal/oracles.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "deal/errors.hpp"
#include "deal/rng.hpp"

namespace deal::oracle {

FdGradient finite_diff_gradient(const std::function<double(const Vector&)>& value, const Vector& x,
                                const OracleConfig& cfg) {
  FdGradient out;
  const Eigen::Index n = x.size();
  out.gradient = Vector::Zero(n);
  const double f0 = value(x);
  if (!std::isfinite(f0)) throw NumericalError("finite differences: f(x) is not finite");
  Vector xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = cfg.fd_scale * (1.0 + std::abs(x(i)));
    auto probe = [&](double t) {
      xp(i) = x(i) + t;
      const double v = value(xp);
      xp(i) = x(i);
      if (!std::isfinite(v)) {
        throw NumericalError("finite differences: non-finite value probing coordinate " + std::to_string(i));
      }
      return v;
    };
    const double fp = probe(h), fm = probe(-h), fp2 = probe(2 * h), fm2 = probe(-2 * h);
    out.gradient(i) = (fp - fm) / (2 * h);
    // A derivative jump keeps the one-sided gap fixed as h doubles; smooth curvature doubles it.
    const double gap1 = (fp - f0) / h - (f0 - fm) / h;
    const double gap2 = (fp2 - f0) / (2 * h) - (f0 - fm2) / (2 * h);
    const double scale = 1.0 + std::abs(out.gradient(i));
    if (std::abs(gap1) > 1e-5 * scale && std::abs(gap2) < 1.5 * std::abs(gap1)) {
      out.kink_coordinates.push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

double golden_section(const std::function<double(double)>& g, double a, double b, double tol, int max_iter) {
  if (a > b) std::swap(a, b);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = g(d);
    }
  }
  return gc <= gd ? c : d;
}

ScalarMinimum scalar_minimize(const std::function<double(double)>& g, double lo, double hi,
                              const OracleConfig& cfg, const std::vector<double>& probes) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw UsageError("scalar_minimize needs lo < hi");
  const int N = std::max(cfg.grid_points, 3);
  std::vector<double> t(N), v(N);
  for (int i = 0; i < N; ++i) {
    t[i] = lo + (hi - lo) * static_cast<double>(i) / (N - 1);
    const double gi = g(t[i]);
    v[i] = std::isnan(gi) ? std::numeric_limits<double>::infinity() : gi;
  }
  if (std::isfinite(v[0]) && std::isfinite(v[N - 1]) && v[0] < v[1] && v[N - 1] < v[N - 2]) {
    throw DomainError("scalar_minimize: objective decreases outward at both ends of the bracket");
  }

  std::vector<int> minima;
  for (int i = 0; i < N; ++i) {
    const bool left = i == 0 || v[i] <= v[i - 1];
    const bool right = i == N - 1 || v[i] <= v[i + 1];
    if (left && right && std::isfinite(v[i])) minima.push_back(i);
  }
  std::stable_sort(minima.begin(), minima.end(), [&](int a, int b) { return v[a] < v[b]; });
  if (minima.size() > static_cast<std::size_t>(cfg.starts)) minima.resize(cfg.starts);

  std::vector<std::pair<double, double>> cands;  // (value, t)
  for (int i : minima) {
    const double a = t[std::max(i - 1, 0)], b = t[std::min(i + 1, N - 1)];
    const double ts = golden_section(g, a, b, cfg.golden_tol);
    const double vs = g(ts);
    // Keep the grid point when refinement did not improve on it.
    if (std::isfinite(vs) && vs <= v[i]) cands.emplace_back(vs, ts);
    else cands.emplace_back(v[i], t[i]);
  }
  for (double p : probes) {
    if (p < lo || p > hi) continue;
    const double vp = g(p);
    if (std::isfinite(vp)) cands.emplace_back(vp, p);
  }
  if (cands.empty()) throw DomainError("scalar_minimize: objective is not finite anywhere on the bracket");
  std::sort(cands.begin(), cands.end());

  ScalarMinimum out;
  const double best = cands.front().first;
  double lo_v = std::numeric_limits<double>::infinity(), hi_v = -lo_v;
  for (double vi : v) {
    if (!std::isfinite(vi)) continue;
    lo_v = std::min(lo_v, vi);
    hi_v = std::max(hi_v, vi);
  }
  const double spread = std::isfinite(lo_v) ? std::max(hi_v - lo_v, std::abs(hi_v)) : 0.0;
  // Relative to best, floored at the rounding level of g over the bracket.
  const double tie = std::max(cfg.tie_tol * std::abs(best), 64 * std::numeric_limits<double>::epsilon() * spread);
  const double separation = 1e-6 * (hi - lo);
  double arg = cands.front().second;
  for (const auto& [val, tt] : cands) {
    if (val - best > tie) break;
    if (std::abs(tt - arg) > separation) out.multi_valued = true;
  }
  for (const auto& [val, tt] : cands) {
    if (val - best > tie) break;
    if (std::abs(tt) < std::abs(arg)) arg = tt;
  }
  out.argmin = arg;
  out.value = g(arg);
  for (const auto& c : cands) out.candidates.push_back(c.second);
  return out;
}

SpectralConstants spectral_constants_svd(const Matrix& A) {
  if (A.size() == 0) throw UsageError("spectral constants of an empty matrix");
  Eigen::BDCSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  SpectralConstants out;
  out.opnorm = s(0);
  out.sigma_min = A.rows() >= A.cols() ? s(s.size() - 1) : 0.0;
  out.method = "svd";
  return out;
}

SpectralConstants spectral_constants(const Matrix& A, const OracleConfig& cfg) {
  if (A.size() == 0) throw UsageError("spectral constants of an empty matrix");
  if (static_cast<std::size_t>(std::min(A.rows(), A.cols())) <= cfg.exact_svd_limit || A.rows() < A.cols()) {
    return spectral_constants_svd(A);
  }
  const Matrix M = A.transpose() * A;
  const Eigen::Index n = M.rows();
  const double rtol = std::sqrt(cfg.spectral_tol);
  Rng rng(0x5eed);

  Vector v = rng.normal_vector(n).normalized();
  double lmax = 0.0;
  for (int it = 0; it < cfg.spectral_cap; ++it) {
    const Vector w = M * v;
    lmax = v.dot(w);
    if ((w - lmax * v).norm() <= rtol * lmax) break;
    v = w.normalized();
  }

  SpectralConstants out;
  out.opnorm = std::sqrt(lmax);
  out.method = "iteration";
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    out.sigma_min = 0.0;
    return out;
  }
  v = rng.normal_vector(n).normalized();
  double lmin = 0.0;
  for (int it = 0; it < cfg.spectral_cap; ++it) {
    const Vector Mv = M * v;
    lmin = v.dot(Mv);
    if ((Mv - lmin * v).norm() <= rtol * lmin) break;
    v = llt.solve(v).normalized();
  }
  out.sigma_min = std::sqrt(std::max(lmin, 0.0));
  return out;
}

double estimate_holder_constant(const SmoothObjective& objective, double nu, const Vector& center, double radius,
                                int pairs, std::uint64_t seed) {
  if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("nu must lie in (0, 1]");
  if (!(radius > 0.0) || pairs <= 0) throw UsageError("radius and pairs must be positive");
  Rng rng(seed);
  const Eigen::Index n = center.size();
  double best = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vector x = center + rng.uniform_vector(n, -radius, radius);
    Vector y;
    if (i % 2 == 0) {
      y = center + rng.uniform_vector(n, -radius, radius);
    } else {
      const double scale = radius * std::pow(10.0, -rng.uniform(0.0, 6.0));
      y = x + scale * rng.normal_vector(n).normalized();
    }
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    const double num = (objective.gradient(x) - objective.gradient(y)).norm();
    best = std::max(best, num / std::pow(dist, nu));
  }
  return best;
}

ProxResult prox_grid(const std::function<double(const Vector&)>& g, const Vector& x, double gamma, double p,
                     double radius, int levels) {
  const Eigen::Index n = x.size();
  if (n < 1 || n > 3) throw UsageError("prox_grid supports dimensions 1 to 3");
  if (!(gamma > 0.0) || !(p > 1.0) || !(radius > 0.0)) throw UsageError("prox_grid needs gamma > 0, p > 1, radius > 0");
  const int side = n == 3 ? 21 : 41;
  auto h = [&](const Vector& y) {
    const double v = g(y) + std::pow((x - y).norm(), p) / (p * gamma);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  ProxResult out;
  Vector centre = x;
  double width = radius;
  double best_val = h(centre);
  Vector best = centre;
  for (int level = 0; level < levels; ++level) {
    const double spacing = 2.0 * width / (side - 1);
    std::vector<std::pair<double, Vector>> evals;
    const int total = static_cast<int>(std::pow(side, n));
    for (int idx = 0; idx < total; ++idx) {
      Vector y(n);
      int rem = idx;
      for (Eigen::Index d = 0; d < n; ++d) {
        y(d) = centre(d) - width + spacing * (rem % side);
        rem /= side;
      }
      const double v = h(y);
      if (level == 0) evals.emplace_back(v, y);
      if (v < best_val) {
        best_val = v;
        best = y;
      }
    }
    if (level == 0) {
      const double tie = 1e-9 * std::max(1.0, std::abs(best_val));
      for (const auto& [v, y] : evals) {
        if (v - best_val <= tie && (y - best).norm() > 2.5 * spacing) out.multi_valued = true;
      }
    }
    centre = best;
    width /= 5.0;
  }
  out.point = best;
  return out;
}

}  // namespace deal::oracle
