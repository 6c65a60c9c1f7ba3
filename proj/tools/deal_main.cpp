// deal: run, certify and analyze generalized descent experiments.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "deal/analysis.hpp"
#include "deal/certificates.hpp"
#include "deal/envelopes.hpp"
#include "deal/errors.hpp"
#include "deal/experiment.hpp"
#include "deal/oracles.hpp"
#include "deal/trace_io.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCertificate = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw deal::UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

deal::Vector read_point(const std::string& path) {
  std::string text = read_file(path);
  for (char& c : text)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(text);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw deal::DataError("point file " + path + " contains a non-numeric token");
  if (v.empty()) throw deal::DataError("point file " + path + " is empty");
  return Eigen::Map<deal::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::optional<double> parse_auto(const std::string& s, const char* what) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw deal::UsageError(std::string(what) + " must be 'auto' or a number, got '" + s + "'");
  }
}

json vec_json(const deal::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json report_json(const deal::CertificateReport& r) {
  return {{"name", r.name},
          {"passed", r.passed},
          {"checked", r.checked},
          {"violations", r.violations},
          {"worst_slack", std::isfinite(r.worst_slack) ? json(r.worst_slack) : json(nullptr)},
          {"first_violation", r.first_violation ? json(*r.first_violation) : json(nullptr)}};
}

deal::ProxCapable parse_g(const std::string& spec) {
  if (spec == "zero") return deal::zero_function();
  if (spec == "l1") return deal::l1_norm(1.0);
  if (spec.rfind("l1:", 0) == 0) return deal::l1_norm(std::stod(spec.substr(3)));
  if (spec.rfind("power:", 0) == 0) {
    const double s = std::stod(spec.substr(6));
    return deal::to_prox_capable(deal::make_power_abs(s, 1));
  }
  throw deal::UsageError("unknown function '" + spec + "' (zero, l1, l1:<lambda>, power:<s>)");
}

// ---------------------------------------------------------------- run / sweep

struct RunOptions {
  std::string preset;
  std::string config_file;
  std::string problem;
  std::size_t m = 0, n = 0;
  double p = 0, lambda = 0, s = 0;
  bool consistent = false;
  std::int64_t seed = -1;
  std::string solver;
  std::string beta = "auto";
  std::string direction = "grad";
  std::string order = "auto";
  std::string gamma, sigma;
  double armijo_sigma = 0;
  double eps = 0;
  int max_iter = -1;
  int reps = 0;
  int jobs = 0;
  std::string out;
  bool no_iterates = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--preset", o.preset, "leastp-pair, leastp-family, lasso-boosted or power-order");
  cmd->add_option("--config", o.config_file, "JSON config file");
  cmd->add_option("--problem", o.problem, "leastp, lasso, power_abs, quadratic");
  cmd->add_option("--m", o.m, "samples");
  cmd->add_option("--n", o.n, "features");
  cmd->add_option("--p", o.p, "least-p exponent");
  cmd->add_option("--lambda", o.lambda, "lasso weight");
  cmd->add_option("--s", o.s, "power_abs exponent");
  cmd->add_flag("--consistent", o.consistent, "b in the range of A");
  cmd->add_option("--seed", o.seed, "problem seed");
  cmd->add_option("--solver", o.solver, "deal-c, deal-a, bpga, bhippa (replaces the variant list)");
  cmd->add_option("--beta", o.beta, "auto or a number");
  cmd->add_option("--direction", o.direction, "zero, grad, bb1, bb2, lbfgs");
  cmd->add_option("--order", o.order, "auto or the HOME order p");
  cmd->add_option("--gamma", o.gamma, "auto or prox parameter");
  cmd->add_option("--sigma", o.sigma, "auto or acceptance parameter of the boosted solvers");
  cmd->add_option("--armijo-sigma", o.armijo_sigma, "Armijo sigma");
  cmd->add_option("--eps", o.eps, "gradient tolerance");
  cmd->add_option("--max-iter", o.max_iter, "iteration cap");
  cmd->add_option("--reps", o.reps, "repetitions");
  cmd->add_option("--jobs", o.jobs, "parallel workers");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--no-iterates", o.no_iterates, "do not store iterates");
}

deal::ExperimentConfig build_config(const RunOptions& o) {
  deal::ExperimentConfig c;
  if (!o.preset.empty() && !o.config_file.empty()) throw deal::UsageError("--preset and --config are exclusive");
  if (!o.preset.empty()) c = deal::preset(o.preset);
  if (!o.config_file.empty()) c = deal::parse_experiment_config(read_file(o.config_file));
  if (!o.problem.empty()) c.problem.kind = deal::parse_problem_kind(o.problem);
  if (o.m) c.problem.m = o.m;
  if (o.n) c.problem.n = o.n;
  if (o.p) c.problem.params.p = o.p;
  if (o.lambda) c.problem.params.lambda = o.lambda;
  if (o.s) c.problem.params.s = o.s;
  if (o.consistent) c.problem.params.consistent = true;
  if (o.seed >= 0) c.problem.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.solver.empty()) {
    deal::VariantSpec v;
    v.solver = deal::parse_solver_kind(o.solver);
    v.name = deal::to_string(v.solver);
    v.beta = parse_auto(o.beta, "--beta");
    v.direction = deal::parse_direction_kind(o.direction);
    v.order = parse_auto(o.order, "--order");
    c.solver.variants = {v};
  }
  if (!o.gamma.empty()) c.solver.gamma = parse_auto(o.gamma, "--gamma");
  if (!o.sigma.empty()) c.solver.sigma = parse_auto(o.sigma, "--sigma");
  if (o.armijo_sigma) c.solver.armijo.sigma = o.armijo_sigma;
  if (o.eps) c.run.eps = o.eps;
  if (o.max_iter >= 0) c.run.max_iter = o.max_iter;
  if (o.reps) c.run.repetitions = o.reps;
  if (o.jobs) c.run.jobs = o.jobs;
  if (o.no_iterates) c.run.store_iterates = false;
  if (!o.out.empty()) c.output.directory = o.out;
  return c;
}

int report_experiment(const deal::ExperimentResult& r) {
  std::cout << "variant,rep,iterations,termination,final_grad_norm,guaranteed,certificates\n";
  for (const auto& o : r.outcomes) {
    std::cout << o.variant << ',' << o.repetition << ',' << o.iterations << ',' << o.termination << ','
              << deal::format_double(o.final_grad_norm) << ',' << (o.bundle.guaranteed ? "yes" : "no") << ','
              << (o.bundle.passed() ? "pass" : "FAIL") << '\n';
  }
  std::cout << "output: " << r.directory.string() << '\n';
  return r.all_guaranteed_passed() ? kExitOk : kExitCertificate;
}

int cmd_run(const RunOptions& o) { return report_experiment(deal::run_experiment(build_config(o))); }

int cmd_sweep(const RunOptions& o, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw deal::UsageError("sweep needs --seeds");
  deal::ExperimentConfig base = build_config(o);
  int worst = kExitOk;
  const auto root = base.output.directory;
  for (auto seed : seeds) {
    deal::ExperimentConfig c = base;
    c.problem.seed = seed;
    c.output.directory = root / ("seed-" + std::to_string(seed));
    std::cout << "# seed " << seed << '\n';
    worst = std::max(worst, report_experiment(deal::run_experiment(c)));
  }
  return worst;
}

// ---------------------------------------------------------------- certify / analyze

struct TraceOptions {
  std::string trace;
  std::optional<double> rho, theta, c, fstar, tau, vartheta;
  double rel_tol = deal::kDefaultRelTol;
  double eps = 1e-6;
  double tail = 0.5;
  std::string xstar;
};

void add_trace_options(CLI::App* cmd, TraceOptions& o) {
  cmd->add_option("--trace", o.trace, "trace CSV")->required();
  cmd->add_option("--rho", o.rho, "descent constant (default: sidecar)");
  cmd->add_option("--theta", o.theta, "descent exponent (default: sidecar)");
  cmd->add_option("--fstar", o.fstar, "optimal value");
}

int cmd_certify(const TraceOptions& o) {
  const deal::IterateTrace t = deal::load_trace(o.trace);
  const double rho = o.rho.value_or(t.rho), theta = o.theta.value_or(t.theta);
  json out;
  out["trace"] = o.trace;
  out["heuristic"] = t.heuristic;
  json reports = json::array();
  bool ok = true;
  auto add = [&](const deal::CertificateReport& r) {
    reports.push_back(report_json(r));
    ok = ok && r.passed;
  };
  add(deal::certify_descent(t, rho, theta, o.rel_tol));
  if (const auto c = o.c ? o.c : t.displacement_c) add(deal::certify_displacement(t, *c, theta, o.rel_tol));
  if (o.fstar) add(deal::min_grad_bound_check(t, rho, theta, *o.fstar, o.rel_tol));
  out["certificates"] = reports;
  out["passed"] = ok;
  std::cout << out.dump(2) << '\n';
  return ok ? kExitOk : kExitCertificate;
}

int cmd_analyze(const TraceOptions& o) {
  if (!o.fstar) throw deal::UsageError("analyze needs --fstar");
  const deal::IterateTrace t = deal::load_trace(o.trace);
  deal::RateReport r = deal::fit_linear_rate(t, *o.fstar, o.tail);
  const double rho = o.rho.value_or(t.rho), theta = o.theta.value_or(t.theta);
  auto opt = [](const std::optional<double>& v) { return v ? json(v.value()) : json(nullptr); };
  json out;
  if (o.tau && rho > 0.0) {
    const double q = 1.0 - rho / std::pow(*o.tau, theta);
    if (q > 0.0 && q < 1.0) r.q_theory = q;
  }
  out["rate"] = {{"q_hat_max", opt(r.q_hat_max)},     {"q_hat_ls", opt(r.q_hat_ls)},
                 {"q_theory", opt(r.q_theory)},       {"vartheta_hat", opt(r.vartheta_hat)},
                 {"mu_hat", opt(r.mu_hat)},           {"decay_hat", opt(r.decay_hat)},
                 {"regime", deal::to_string(r.regime)}, {"tail_window", r.tail_window},
                 {"note", r.note}};
  bool ok = true;
  if (o.tau && rho > 0.0) {
    deal::ComplexityInputs in;
    in.fstar = *o.fstar;
    in.rho = rho;
    in.theta = theta;
    in.tau = *o.tau;
    in.eps = o.eps;
    in.c = o.c ? o.c : t.displacement_c;
    if (!o.xstar.empty()) in.xstar = read_point(o.xstar);
    const auto cr = deal::verify_complexity(t, in);
    json crit = json::array();
    for (const auto& c : cr.criteria) {
      crit.push_back({{"name", c.name},
                      {"measured", c.measured ? json(*c.measured) : json(nullptr)},
                      {"bound", c.bound},
                      {"available", c.available},
                      {"passed", c.passed},
                      {"note", c.note}});
    }
    out["complexity"] = {{"q", cr.q}, {"vacuous", cr.vacuous}, {"passed", cr.passed}, {"criteria", crit}};
    ok = cr.passed;
    if (o.vartheta) out["kl_theta_consistent"] = deal::kl_theta_consistent(t, *o.fstar, *o.vartheta, *o.tau);
  }
  std::cout << out.dump(2) << '\n';
  return ok ? kExitOk : kExitCertificate;
}

// ---------------------------------------------------------------- oracle / envelope

int cmd_oracle_spectral(std::size_t m, std::size_t n, std::uint64_t seed) {
  const auto gp = deal::generate_problem(seed, deal::ProblemKind::lasso, m, n, {});
  const auto& A = std::get<deal::LassoProblem>(gp.problem).A;
  const auto it = deal::oracle::spectral_constants(A);
  const auto svd = deal::oracle::spectral_constants_svd(A);
  json out = {{"m", m},
              {"n", n},
              {"seed", seed},
              {"method", it.method},
              {"opnorm", it.opnorm},
              {"sigma_min", it.sigma_min},
              {"svd_opnorm", svd.opnorm},
              {"svd_sigma_min", svd.sigma_min}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_oracle_prox(const std::string& g_spec, double x, double gamma, double p) {
  const deal::ProxCapable g = parse_g(g_spec);
  deal::Vector xv(1);
  xv << x;
  const deal::ProxResult pr = g.prox(xv, gamma, p);
  auto h = [&](double t) {
    deal::Vector tv(1);
    tv << t;
    return g.value(tv) + std::pow(std::abs(x - t), p) / (p * gamma);
  };
  const double r = 10.0 + 2.0 * std::abs(x);
  const auto ref = deal::oracle::scalar_minimize(h, x - r, x + r, {}, {0.0, x});
  json out = {{"g", g_spec},          {"x", x},
              {"gamma", gamma},       {"p", p},
              {"prox", pr.point(0)},  {"multi_valued", pr.multi_valued},
              {"oracle", ref.argmin}, {"oracle_multi_valued", ref.multi_valued},
              {"difference", std::abs(pr.point(0) - ref.argmin)}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_envelope(const std::string& g_spec, double p, double gamma, const std::string& at) {
  const deal::ProxCapable g = parse_g(g_spec);
  const deal::Vector x = read_point(at);
  const deal::EnvelopeEval e = deal::home_value_grad(g, x, gamma, p);
  json out = {{"x", vec_json(e.x)},
              {"prox_point", vec_json(e.prox_point)},
              {"value", e.value},
              {"gradient", e.gradient ? vec_json(*e.gradient) : json(nullptr)},
              {"multi_valued", e.multi_valued}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deal: generalized descent solvers with per-iteration certificates"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run an experiment and certify every trace");
  add_run_options(run, run_opts);

  RunOptions sweep_opts;
  std::vector<std::uint64_t> seeds;
  auto* sweep = app.add_subcommand("sweep", "run an experiment over several problem seeds");
  add_run_options(sweep, sweep_opts);
  sweep->add_option("--seeds", seeds, "problem seeds")->delimiter(',')->required();

  TraceOptions cert_opts;
  auto* certify = app.add_subcommand("certify", "check descent certificates on a saved trace");
  add_trace_options(certify, cert_opts);
  certify->add_option("--c", cert_opts.c, "displacement constant (default: sidecar)");
  certify->add_option("--rel-tol", cert_opts.rel_tol, "relative tolerance");

  TraceOptions an_opts;
  auto* analyze = app.add_subcommand("analyze", "fit rates and check complexity bounds on a saved trace");
  add_trace_options(analyze, an_opts);
  analyze->add_option("--tau", an_opts.tau, "KL constant");
  analyze->add_option("--vartheta", an_opts.vartheta, "KL exponent");
  analyze->add_option("--c", an_opts.c, "displacement constant");
  analyze->add_option("--xstar", an_opts.xstar, "file with the reference minimizer");
  analyze->add_option("--eps", an_opts.eps, "accuracy for the complexity counts");
  analyze->add_option("--tail", an_opts.tail, "tail fraction for the fits");

  auto* oracle = app.add_subcommand("oracle", "reference oracles for debugging");
  oracle->require_subcommand(1);
  std::size_t om = 100, on = 20;
  std::uint64_t oseed = 1;
  auto* spectral = oracle->add_subcommand("spectral", "norm and smallest singular value of a seeded Gaussian matrix");
  spectral->add_option("--m", om);
  spectral->add_option("--n", on);
  spectral->add_option("--seed", oseed);
  std::string pg = "l1";
  double px = 2.0, pgamma = 1.0, pp = 2.0;
  auto* prox = oracle->add_subcommand("prox", "scalar prox against the grid and golden-section oracle");
  prox->add_option("--g", pg, "zero, l1, l1:<lambda>, power:<s>");
  prox->add_option("--x", px);
  prox->add_option("--gamma", pgamma);
  prox->add_option("--p", pp);
  auto* schema = oracle->add_subcommand("schema", "print the experiment config JSON schema");

  std::string eg = "l1", eat;
  double ep = 2.0, egamma = 1.0;
  auto* envelope = app.add_subcommand("envelope", "evaluate a high-order Moreau envelope");
  envelope->add_option("--g", eg, "zero, l1, l1:<lambda>, power:<s>");
  envelope->add_option("--p", ep);
  envelope->add_option("--gamma", egamma);
  envelope->add_option("--at", eat, "file with the point")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, seeds);
    if (*certify) return cmd_certify(cert_opts);
    if (*analyze) return cmd_analyze(an_opts);
    if (*spectral) return cmd_oracle_spectral(om, on, oseed);
    if (*prox) return cmd_oracle_prox(pg, px, pgamma, pp);
    if (*schema) {
      std::cout << deal::experiment_config_schema() << '\n';
      return kExitOk;
    }
    if (*envelope) return cmd_envelope(eg, ep, egamma, eat);
  } catch (const deal::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const deal::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const deal::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
