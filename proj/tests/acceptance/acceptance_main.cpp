#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "deal/analysis.hpp"
#include "deal/boosted.hpp"
#include "deal/certificates.hpp"
#include "deal/envelopes.hpp"
#include "deal/experiment.hpp"
#include "deal/oracles.hpp"
#include "deal/problems.hpp"
#include "deal/rng.hpp"
#include "deal/solvers.hpp"

using namespace deal;
namespace fs = std::filesystem;

namespace {

constexpr double kRelTol = 1e-10;
constexpr std::uint64_t kInstances = 10;
// Final grid spacing 20 / 40 / 5^13, well below the 1e-6 agreement target.
constexpr int kGridLevels = 14;

struct Outcome {
  bool passed = true;
  std::string detail;
};

struct Tally {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::string first;

  void check(bool ok, const std::string& what) {
    ++checked;
    if (!ok && violations++ == 0) first = what;
  }
  Outcome outcome(const std::string& label) const {
    std::ostringstream os;
    os << label << ": " << checked << " checks, " << violations << " violations";
    if (violations) os << " (first: " << first << ")";
    return {violations == 0 && checked > 0, os.str()};
  }
};

struct SolverRun {
  std::string solver;
  std::uint64_t seed = 0;
  IterateTrace trace;
  IterateTrace reevaluated;
  double fstar = 0.0;
};

LeastPProblem leastp_instance(std::uint64_t seed, double p, std::size_t m = 200, std::size_t n = 50) {
  return std::get<LeastPProblem>(generate_problem(seed, ProblemKind::leastp, m, n, {.p = p, .consistent = true}).problem);
}

LassoProblem lasso_instance(std::uint64_t seed) {
  return std::get<LassoProblem>(generate_problem(seed, ProblemKind::lasso, 1000, 10, {.lambda = 0.1}).problem);
}

std::vector<SolverRun>& solver_runs() {
  static std::vector<SolverRun> runs = [] {
    std::vector<SolverRun> out;
    for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
      const auto lp = leastp_instance(seed, 1.5);
      const auto obj = to_objective(lp);
      DealConfig cfg;
      cfg.store_iterates = true;
      cfg.max_iter = 5000;
      for (auto [name, run] : {std::pair{"DEAL-C", &run_dealc}, std::pair{"DEAL-A", &run_deala}}) {
        auto t = run(obj, default_start(50, seed), cfg);
        auto re = reevaluate(t, obj);
        out.push_back({name, seed, std::move(t), std::move(re), lp.fstar});
      }

      const auto lasso = lasso_instance(seed);
      const auto comp = to_composite(lasso);
      const DirectionKind kinds[] = {DirectionKind::gradient, DirectionKind::bb1, DirectionKind::bb2,
                                     DirectionKind::lbfgs};
      BoostedConfig bcfg;
      bcfg.direction = DirectionOptions::defaults(kinds[seed % 4]);
      bcfg.store_iterates = true;
      auto bt = run_bpga(comp, default_start(10, seed), bcfg);
      auto bre = reevaluate(bt, fbe_objective(comp, bt.params.at("gamma")));
      out.push_back({"BPGA", seed, std::move(bt), std::move(bre), 0.0});

      const auto phi = to_prox_capable(make_power_abs(4.0, 1));
      BoostedConfig hcfg;
      hcfg.p = choose_order(0.75);
      hcfg.store_iterates = true;
      auto ht = run_bhippa(phi, default_start(1, seed), hcfg);
      auto hre = reevaluate(ht, home_objective(phi, ht.params.at("gamma"), hcfg.p, 1));
      out.push_back({"BHiPPA", seed, std::move(ht), std::move(hre), 0.0});
    }
    return out;
  }();
  return runs;
}

std::string where(const SolverRun& r) { return r.solver + " seed " + std::to_string(r.seed); }

Outcome descent_certificates() {
  Tally tally;
  for (const auto& r : solver_runs()) {
    const auto solver_side = certify_descent(r.trace, r.trace.rho, r.trace.theta, kRelTol);
    const auto oracle_side = certify_descent(r.reevaluated, r.trace.rho, r.trace.theta, kRelTol);
    tally.check(solver_side.passed && oracle_side.passed && solver_side.checked > 0, where(r));
  }
  return tally.outcome("descent on 4 solvers x 10 instances");
}

Outcome armijo_backtracking() {
  Tally tally;
  for (double p : {1.5, 2.0}) {
    for (std::uint64_t seed = 0; seed < kInstances; ++seed) {
      const auto lp = leastp_instance(100 + seed, p);
      DealConfig cfg;
      cfg.armijo.sigma = 0.5;
      cfg.max_iter = 5000;
      auto t = run_deala(to_objective(lp), default_start(50, seed), cfg);
      const double p_bar = t.params.at("p_bar"), alpha_tilde = t.params.at("alpha_tilde");
      for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const auto& rec = t.records[k];
        const std::string at = "p " + std::to_string(p) + " seed " + std::to_string(seed) + " k " + std::to_string(k);
        tally.check(rec.inner_count <= p_bar, at + " p_k");
        tally.check(rec.step >= alpha_tilde * (1 - 1e-12), at + " alpha_k");
      }
    }
  }
  return tally.outcome("backtracks and steps");
}

struct RateRun {
  double p;
  std::uint64_t seed;
  LeastPProblem problem;
  IterateTrace trace;
};

std::vector<RateRun>& rate_runs() {
  static std::vector<RateRun> runs = [] {
    std::vector<RateRun> out;
    for (double p : {1.5, 2.0}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        // At p = 1.5 the step falls below the spacing of x once ||g||^2 alpha < ulp(x);
        // 40 x 10 keeps that floor under the 1e-6 accuracy.
        auto lp = leastp_instance(200 + seed, p, 40, 10);
        DealConfig cfg;
        cfg.store_iterates = true;
        cfg.eps = 1e-9;
        cfg.max_iter = 20000;
        auto t = run_dealc(to_objective(lp), default_start(10, seed), cfg);
        out.push_back({p, seed, std::move(lp), std::move(t)});
      }
    }
    return out;
  }();
  return runs;
}

Outcome linear_rate() {
  Tally tally;
  double worst_fit = 0.0;
  for (const auto& r : rate_runs()) {
    const auto c = leastp_constants(r.problem);
    const auto& t = r.trace;
    const double q_theory = 1.0 - t.rho / std::pow(c.tau, t.theta);
    const std::string at = "p " + std::to_string(r.p) + " seed " + std::to_string(r.seed);
    tally.check(q_theory > 0.0 && q_theory < 1.0, at + " q_theory in (0,1)");
    const double floor = gap_floor(r.problem.fstar);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
      const double gap = t.records[k].f - r.problem.fstar;
      if (gap <= floor) continue;
      const double ratio = (t.records[k + 1].f - r.problem.fstar) / gap;
      tally.check(ratio <= q_theory * (1 + kRelTol), at + " k " + std::to_string(k));
    }
    const auto fit = fit_linear_rate(t, r.problem.fstar);
    tally.check(fit.q_hat_max.has_value() && *fit.q_hat_max < 1.0, at + " fitted q");
    if (fit.q_hat_max) worst_fit = std::max(worst_fit, *fit.q_hat_max);
  }
  auto out = tally.outcome("per-step ratio vs 1 - rho/tau^theta");
  out.detail += ", worst fitted q " + std::to_string(worst_fit);
  return out;
}

Outcome complexity_bounds() {
  Tally tally;
  for (const auto& r : rate_runs()) {
    const auto c = leastp_constants(r.problem);
    ComplexityInputs in{.fstar = r.problem.fstar, .rho = r.trace.rho, .theta = r.trace.theta, .tau = c.tau, .eps = 1e-6};
    in.xstar = r.problem.x_ls;
    in.c = r.trace.displacement_c;
    const auto rep = verify_complexity(r.trace, in);
    for (const auto& cr : rep.criteria) {
      std::ostringstream at;
      at << "p " << r.p << " seed " << r.seed << " " << cr.name << " measured " << cr.measured.value_or(-1)
         << " bound " << cr.bound;
      tally.check(cr.available && cr.measured.has_value() && cr.passed, at.str());
    }
  }
  return tally.outcome("N^f, N, N^x against K");
}

Outcome min_grad_bound() {
  Tally tally;
  for (const auto& r : solver_runs()) {
    const auto rep = min_grad_bound_check(r.reevaluated, r.trace.rho, r.trace.theta, r.fstar, kRelTol);
    tally.check(rep.passed, where(r));
  }
  for (const auto& r : rate_runs()) {
    const auto rep = min_grad_bound_check(r.trace, r.trace.rho, r.trace.theta, r.problem.fstar, kRelTol);
    tally.check(rep.passed, "rate run seed " + std::to_string(r.seed));
  }
  return tally.outcome("every prefix of every trace");
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

Outcome gradient_formulas() {
  Tally tally;
  std::size_t skipped = 0;
  const auto lp = leastp_instance(7, 1.5, 100, 20);
  const auto obj = to_objective(lp);
  const auto lasso = std::get<LassoProblem>(generate_problem(7, ProblemKind::lasso, 200, 10, {.lambda = 0.1}).problem);
  const auto comp = to_composite(lasso);
  const double gamma = 0.95 / comp.lipschitz();
  const auto pow4 = separable_function([](double t) { return t * t * t * t; }, "pow4");
  Rng rng(77);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Vector x = default_start(20, 1000 + i);
    const auto fd = oracle::finite_diff_gradient(obj.value, x);
    if (fd.skipped()) {
      ++skipped;
    } else {
      tally.check(rel_err(fd.gradient, obj.gradient(x)) <= 1e-6, "least-p point " + std::to_string(i));
    }

    const Vector y = default_start(10, 2000 + i);
    const auto fe = fbe_value_grad(comp, y, gamma);
    const auto fdf = oracle::finite_diff_gradient([&](const Vector& z) { return fbe_value(comp, z, gamma); }, y);
    if (fdf.skipped() || !fe.gradient) {
      ++skipped;
    } else {
      tally.check(rel_err(fdf.gradient, *fe.gradient) <= 1e-4, "FBE point " + std::to_string(i));
    }

    const Vector s = rng.uniform_vector(1, -3, 3);
    const double p = i % 2 ? 4.0 : 1.5;
    const auto he = home_value_grad(pow4, s, 0.8, p);
    const auto fdh =
        oracle::finite_diff_gradient([&](const Vector& z) { return home_value_grad(pow4, z, 0.8, p).value; }, s);
    if (fdh.skipped() || !he.gradient) {
      ++skipped;
    } else {
      tally.check(rel_err(fdh.gradient, *he.gradient) <= 1e-4, "HOME point " + std::to_string(i));
    }
  }
  auto out = tally.outcome("least-p, FBE and HOME gradients");
  out.detail += ", " + std::to_string(skipped) + " flagged points skipped";
  return out;
}

Outcome prox_and_fbe_oracles() {
  Tally tally;
  Rng rng(1234);
  std::size_t multi = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-5, 5), gamma = rng.uniform(0.1, 2), lambda = rng.uniform(0, 2);
    const std::string at = "case " + std::to_string(i);
    const double soft = prox_l1(Vector::Constant(1, x), gamma * lambda)(0);
    const auto l1_ref =
        oracle::prox_grid([&](const Vector& y) { return lambda * std::abs(y(0)); }, Vector::Constant(1, x), gamma, 2.0, 10.0, kGridLevels);
    tally.check(std::abs(soft - l1_ref.point(0)) <= 1e-6, at + " l1");

    const double s = 1.5 + 3.0 * (i % 4) / 3.0;
    const double p = i % 3 == 0 ? 2.0 : rng.uniform(1.2, 4.0);
    const auto g = [s](double t) { return std::pow(std::abs(t), s); };
    const auto mine = prox_home_separable(g, Vector::Constant(1, x), gamma, p);
    const auto ref = oracle::prox_grid([&](const Vector& y) { return g(y(0)); }, Vector::Constant(1, x), gamma, p, 10.0, kGridLevels);
    if (mine.multi_valued || ref.multi_valued) {
      ++multi;
      continue;
    }
    tally.check(std::abs(mine.point(0) - ref.point(0)) <= 1e-6, at + " power s " + std::to_string(s));
  }

  const auto lasso = std::get<LassoProblem>(generate_problem(11, ProblemKind::lasso, 200, 10, {.lambda = 0.1}).problem);
  const auto comp = to_composite(lasso);
  const double L = comp.lipschitz();
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double gamma = (0.05 + 0.9 * (i % 10) / 9.0) / L;
    const Vector x = default_start(10, 3000 + i);
    const auto e = fbe_value_grad(comp, x, gamma);
    const Vector& T = e.prox_point;
    const double r2 = (x - T).squaredNorm();
    const double tol = kRelTol * std::max(1.0, std::abs(e.value));
    const std::string at = "FBE point " + std::to_string(i);
    tally.check(fbe_value(comp, T, gamma) <= comp.value(T) + tol, at + " lower");
    tally.check(comp.value(T) <= e.value - (1 - gamma * L) / (2 * gamma) * r2 + tol, at + " sandwich");
    tally.check(e.value <= comp.value(x) + tol, at + " upper");
    tally.check(e.gradient->norm() <= (1 + gamma * L) / gamma * std::sqrt(r2) * (1 + kRelTol), at + " gradient");
  }
  auto out = tally.outcome("scalar prox vs grid oracle and FBE inequalities");
  out.detail += ", " + std::to_string(multi) + " multi-valued cases skipped";
  return out;
}

Outcome holder_and_kl() {
  Tally tally;
  for (double p : {1.5, 2.0}) {
    const auto lp = leastp_instance(300, p, 100, 20);
    const auto obj = to_objective(lp);
    const auto c = leastp_constants(lp);
    const double expected_L = std::pow(2.0, 2.0 - p) * std::pow(lp.opnorm, p);
    tally.check(std::abs(c.L - expected_L) <= 1e-12 * expected_L, "p " + std::to_string(p) + " constant");
    Rng rng(400);
    for (int i = 0; i < 1000; ++i) {
      const Vector x = rng.uniform_vector(20, -5, 5);
      const Vector y = i % 2 ? Vector(x + rng.uniform_vector(20, -1e-3, 1e-3)) : rng.uniform_vector(20, -5, 5);
      const double lhs = (obj.gradient(x) - obj.gradient(y)).norm();
      const double rhs = expected_L * std::pow((x - y).norm(), p - 1);
      tally.check(lhs <= rhs * (1 + 1e-10), "p " + std::to_string(p) + " pair " + std::to_string(i));
    }
    const auto kl = kl_sampling_certificate(obj, box_sampler(20, 5.0, 500), c.vartheta, c.tau, 10000);
    tally.check(kl.samples == 10000 && kl.violations == 0, "p " + std::to_string(p) + " KL");
  }
  return tally.outcome("Hoelder pairs and KL samples");
}

Outcome order_matching() {
  const auto phi = to_prox_capable(make_power_abs(4.0, 1));
  BoostedConfig cfg;
  cfg.direction.kind = DirectionKind::zero;
  cfg.p = choose_order(0.75);
  const auto matched = run_bhippa(phi, Vector::Constant(1, 2.0), cfg);
  const auto rm = fit_linear_rate(matched, 0.0);
  cfg.p = 2.0;
  const auto mismatched = run_bhippa(phi, Vector::Constant(1, 2.0), cfg);
  const auto rs = fit_linear_rate(mismatched, 0.0);
  const auto sub = fit_sublinear(mismatched, 0.0);
  const bool ok_matched = choose_order(0.75) == 4.0 && rm.q_hat_max && *rm.q_hat_max < 1.0;
  const bool ok_mismatched = rs.regime == Regime::sublinear && sub.decay_hat && std::abs(*sub.decay_hat - 2.0) <= 1.0;
  std::ostringstream os;
  os << "p = " << choose_order(0.75) << " q_max " << rm.q_hat_max.value_or(NAN) << "; p = 2 regime "
     << to_string(rs.regime) << " decay " << sub.decay_hat.value_or(NAN);
  return {ok_matched && ok_mismatched, os.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("deal_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

Outcome boosted_lasso_preset() {
  auto cfg = preset("lasso-boosted");
  cfg.output.directory = scratch("lasso-boosted");
  const auto result = run_experiment(cfg);
  bool ok = result.outcomes.size() == 5;
  std::ostringstream os;
  os << "iterations to tolerance:";
  for (const auto& o : result.outcomes) {
    ok = ok && o.final_grad_norm <= 1e-6 && o.iterations <= 10000 && o.termination == "tolerance";
    const auto descent = certify_descent(o.trace, o.trace.rho, o.trace.theta, kRelTol);
    ok = ok && descent.passed && o.bundle.passed();
    os << " " << o.variant << "=" << o.iterations;
  }
  std::printf("comparison report (lasso-boosted preset):\n");
  for (const auto& o : result.outcomes) {
    std::printf("  %-10s iterations %6zu  final grad %.3e  %s\n", o.variant.c_str(), o.iterations,
                o.final_grad_norm, o.termination.c_str());
  }
  fs::remove_all(cfg.output.directory);
  return {ok, os.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Tally tally;
  for (const std::string name : {"leastp-pair", "leastp-family", "lasso-boosted", "power-order"}) {
    auto cfg = preset(name);
    const auto a = scratch(name + "_a"), b = scratch(name + "_b");
    cfg.output.directory = a;
    run_experiment(cfg);
    cfg.output.directory = b;
    cfg.run.jobs = 4;
    run_experiment(cfg);
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      const auto other = b / entry.path().filename();
      tally.check(fs::exists(other) && slurp(entry.path()) == slurp(other), name + " " + entry.path().filename().string());
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
  return tally.outcome("trace CSVs across repeated preset runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"descent certificates", descent_certificates},
      {"armijo backtracking bound", armijo_backtracking},
      {"linear rate bound", linear_rate},
      {"complexity bounds", complexity_bounds},
      {"min-gradient bound", min_grad_bound},
      {"gradient formulas", gradient_formulas},
      {"prox and envelope oracles", prox_and_fbe_oracles},
      {"hoelder and KL constants", holder_and_kl},
      {"order matching", order_matching},
      {"boosted PGA lasso preset", boosted_lasso_preset},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s (%s) [%.1fs]\n", out.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.passed) ++failures;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
