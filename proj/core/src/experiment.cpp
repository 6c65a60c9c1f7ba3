#include "deal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"

#include "deal/analysis.hpp"
#include "deal/envelopes.hpp"
#include "deal/errors.hpp"
#include "deal/rng.hpp"
#include "deal/trace_io.hpp"

namespace deal {

using nlohmann::json;
namespace fs = std::filesystem;

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "deal-c" || name == "dealc") return SolverKind::dealc;
  if (name == "deal-a" || name == "deala") return SolverKind::deala;
  if (name == "bpga") return SolverKind::bpga;
  if (name == "bhippa") return SolverKind::bhippa;
  throw UsageError("unknown solver '" + name + "' (deal-c, deal-a, bpga, bhippa)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::dealc: return "deal-c";
    case SolverKind::deala: return "deal-a";
    case SolverKind::bpga: return "bpga";
    case SolverKind::bhippa: return "bhippa";
  }
  return "unknown";
}

// ---------------------------------------------------------------- config IO

namespace {

class Reader {
public:
  std::vector<std::string> errors;

  void object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      errors.push_back(path + " (expected object)");
      return;
    }
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) errors.push_back(path + "." + k + " (unknown key)");
  }

  template <class T>
  void get(const json& j, const std::string& key, const std::string& path, T& out) {
    if (!j.is_object() || !j.contains(key)) return;
    const json& v = j.at(key);
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
    else if constexpr (std::is_same_v<T, std::string>) ok = v.is_string();
    else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer() && (std::is_signed_v<T> || v.get<long long>() >= 0);
    else ok = v.is_number();
    if (!ok) {
      errors.push_back(path + "." + key + " (wrong type)");
      return;
    }
    out = v.get<T>();
  }

  /// number, "auto" or null
  void get_auto(const json& j, const std::string& key, const std::string& path, std::optional<double>& out) {
    if (!j.is_object() || !j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) {
      out.reset();
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      errors.push_back(path + "." + key + " (expected number or \"auto\")");
    }
  }
};

json auto_json(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader r;
  r.object(j, "$", {"problem", "solver", "run", "output"});
  if (j.contains("problem")) {
    const json& p = j["problem"];
    r.object(p, "$.problem", {"kind", "m", "n", "p", "lambda", "s", "consistent", "seed"});
    std::string kind = to_string(c.problem.kind);
    r.get(p, "kind", "$.problem", kind);
    try {
      c.problem.kind = parse_problem_kind(kind);
    } catch (const UsageError&) {
      r.errors.push_back("$.problem.kind (unknown problem '" + kind + "')");
    }
    r.get(p, "m", "$.problem", c.problem.m);
    r.get(p, "n", "$.problem", c.problem.n);
    r.get(p, "p", "$.problem", c.problem.params.p);
    r.get(p, "lambda", "$.problem", c.problem.params.lambda);
    r.get(p, "s", "$.problem", c.problem.params.s);
    r.get(p, "consistent", "$.problem", c.problem.params.consistent);
    r.get(p, "seed", "$.problem", c.problem.seed);
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    r.object(s, "$.solver",
             {"variants", "c1", "c2", "armijo", "gamma", "sigma", "eta", "alpha_bar", "max_linesearch", "memory"});
    if (s.contains("variants")) {
      if (!s["variants"].is_array()) {
        r.errors.push_back("$.solver.variants (expected array)");
      } else {
        std::size_t i = 0;
        for (const auto& v : s["variants"]) {
          const std::string path = "$.solver.variants[" + std::to_string(i++) + "]";
          r.object(v, path, {"name", "solver", "beta", "direction", "order"});
          VariantSpec vs;
          std::string solver = "deal-c", dir = "grad";
          r.get(v, "name", path, vs.name);
          r.get(v, "solver", path, solver);
          r.get(v, "direction", path, dir);
          r.get_auto(v, "beta", path, vs.beta);
          r.get_auto(v, "order", path, vs.order);
          try {
            vs.solver = parse_solver_kind(solver);
          } catch (const UsageError&) {
            r.errors.push_back(path + ".solver (unknown solver '" + solver + "')");
          }
          try {
            vs.direction = parse_direction_kind(dir);
          } catch (const UsageError&) {
            r.errors.push_back(path + ".direction (unknown direction '" + dir + "')");
          }
          if (vs.name.empty()) vs.name = to_string(vs.solver);
          c.solver.variants.push_back(vs);
        }
      }
    }
    r.get(s, "c1", "$.solver", c.solver.c1);
    r.get(s, "c2", "$.solver", c.solver.c2);
    if (s.contains("armijo")) {
      const json& a = s["armijo"];
      r.object(a, "$.solver.armijo", {"sigma", "eta", "alpha_bar", "max_backtracks"});
      r.get(a, "sigma", "$.solver.armijo", c.solver.armijo.sigma);
      r.get(a, "eta", "$.solver.armijo", c.solver.armijo.eta);
      r.get(a, "alpha_bar", "$.solver.armijo", c.solver.armijo.alpha_bar);
      r.get(a, "max_backtracks", "$.solver.armijo", c.solver.armijo.max_backtracks);
    }
    r.get_auto(s, "gamma", "$.solver", c.solver.gamma);
    r.get_auto(s, "sigma", "$.solver", c.solver.sigma);
    r.get(s, "eta", "$.solver", c.solver.eta);
    r.get(s, "alpha_bar", "$.solver", c.solver.alpha_bar);
    r.get(s, "max_linesearch", "$.solver", c.solver.max_linesearch);
    r.get(s, "memory", "$.solver", c.solver.memory);
  }
  if (j.contains("run")) {
    const json& u = j["run"];
    r.object(u, "$.run", {"eps", "max_iter", "x0_seed", "repetitions", "store_iterates", "jobs"});
    r.get(u, "eps", "$.run", c.run.eps);
    r.get(u, "max_iter", "$.run", c.run.max_iter);
    r.get(u, "x0_seed", "$.run", c.run.x0_seed);
    r.get(u, "repetitions", "$.run", c.run.repetitions);
    r.get(u, "store_iterates", "$.run", c.run.store_iterates);
    r.get(u, "jobs", "$.run", c.run.jobs);
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    r.object(o, "$.output", {"directory"});
    std::string dir = c.output.directory.string();
    r.get(o, "directory", "$.output", dir);
    c.output.directory = dir;
  }
  if (!r.errors.empty()) {
    std::string msg = "invalid config keys:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw UsageError(msg);
  }
  return c;
}

std::string experiment_config_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = {{"kind", to_string(c.problem.kind)},
                  {"m", c.problem.m},
                  {"n", c.problem.n},
                  {"p", c.problem.params.p},
                  {"lambda", c.problem.params.lambda},
                  {"s", c.problem.params.s},
                  {"consistent", c.problem.params.consistent},
                  {"seed", c.problem.seed}};
  json variants = json::array();
  for (const auto& v : c.solver.variants) {
    variants.push_back({{"name", v.name},
                        {"solver", to_string(v.solver)},
                        {"beta", auto_json(v.beta)},
                        {"direction", to_string(v.direction)},
                        {"order", auto_json(v.order)}});
  }
  j["solver"] = {{"variants", variants},
                 {"c1", c.solver.c1},
                 {"c2", c.solver.c2},
                 {"armijo",
                  {{"sigma", c.solver.armijo.sigma},
                   {"eta", c.solver.armijo.eta},
                   {"alpha_bar", c.solver.armijo.alpha_bar},
                   {"max_backtracks", c.solver.armijo.max_backtracks}}},
                 {"gamma", auto_json(c.solver.gamma)},
                 {"sigma", auto_json(c.solver.sigma)},
                 {"eta", c.solver.eta},
                 {"alpha_bar", c.solver.alpha_bar},
                 {"max_linesearch", c.solver.max_linesearch},
                 {"memory", c.solver.memory}};
  j["run"] = {{"eps", c.run.eps},
              {"max_iter", c.run.max_iter},
              {"x0_seed", c.run.x0_seed},
              {"repetitions", c.run.repetitions},
              {"store_iterates", c.run.store_iterates},
              {"jobs", c.run.jobs}};
  j["output"] = {{"directory", c.output.directory.string()}};
  return j.dump(2);
}

std::string experiment_config_schema() {
  const json num = {{"type", "number"}};
  const json integer = {{"type", "integer"}, {"minimum", 0}};
  const json num_or_auto = {{"oneOf", json::array({num, {{"const", "auto"}}, {{"type", "null"}}})}};
  json variant = {{"type", "object"},
                  {"additionalProperties", false},
                  {"properties",
                   {{"name", {{"type", "string"}}},
                    {"solver", {{"enum", {"deal-c", "deal-a", "bpga", "bhippa"}}}},
                    {"beta", num_or_auto},
                    {"direction", {{"enum", {"zero", "grad", "bb1", "bb2", "lbfgs"}}}},
                    {"order", num_or_auto}}}};
  json schema = {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "deal experiment configuration"},
      {"type", "object"},
      {"additionalProperties", false},
      {"properties",
       {{"problem",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"kind", {{"enum", {"leastp", "lasso", "power_abs", "quadratic"}}}},
            {"m", integer},
            {"n", integer},
            {"p", num},
            {"lambda", num},
            {"s", num},
            {"consistent", {{"type", "boolean"}}},
            {"seed", integer}}}}},
        {"solver",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"variants", {{"type", "array"}, {"items", variant}}},
            {"c1", num},
            {"c2", num},
            {"armijo",
             {{"type", "object"},
              {"additionalProperties", false},
              {"properties", {{"sigma", num}, {"eta", num}, {"alpha_bar", num}, {"max_backtracks", integer}}}}},
            {"gamma", num_or_auto},
            {"sigma", num_or_auto},
            {"eta", num},
            {"alpha_bar", num},
            {"max_linesearch", integer},
            {"memory", integer}}}}},
        {"run",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"eps", num},
            {"max_iter", integer},
            {"x0_seed", integer},
            {"repetitions", integer},
            {"store_iterates", {{"type", "boolean"}}},
            {"jobs", integer}}}}},
        {"output",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties", {{"directory", {{"type", "string"}}}}}}}}}};
  return schema.dump(2);
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (c.problem.n == 0) errors.push_back("problem.n must be at least 1");
  if (c.problem.kind != ProblemKind::power_abs && c.problem.m == 0) errors.push_back("problem.m must be at least 1");
  if (c.problem.kind == ProblemKind::leastp && c.problem.m < c.problem.n) errors.push_back("problem.m must be >= n");
  if (c.solver.variants.empty()) errors.push_back("solver.variants is empty");
  std::set<std::string> names;
  for (const auto& v : c.solver.variants) {
    if (!names.insert(v.name).second) errors.push_back("duplicate variant name '" + v.name + "'");
    if (v.name.find_first_of("/\\ ") != std::string::npos) errors.push_back("variant name '" + v.name + "' is not a file name");
    const bool smooth = c.problem.kind == ProblemKind::leastp || c.problem.kind == ProblemKind::quadratic;
    if ((v.solver == SolverKind::dealc || v.solver == SolverKind::deala) && !smooth) {
      errors.push_back("variant '" + v.name + "': " + to_string(v.solver) + " needs a leastp or quadratic problem");
    }
    if (v.solver == SolverKind::bpga && c.problem.kind != ProblemKind::lasso) {
      errors.push_back("variant '" + v.name + "': bpga needs a lasso problem");
    }
    if (v.solver == SolverKind::bhippa && c.problem.kind != ProblemKind::power_abs) {
      errors.push_back("variant '" + v.name + "': bhippa needs a power_abs problem");
    }
    if (v.beta && !(*v.beta > -1.0)) errors.push_back("variant '" + v.name + "': beta must exceed -1");
    if (v.order && !(*v.order > 1.0)) errors.push_back("variant '" + v.name + "': order must exceed 1");
  }
  if (!(c.solver.c1 > 0.0) || !(c.solver.c2 >= c.solver.c1)) errors.push_back("solver needs 0 < c1 <= c2");
  if (!(c.run.eps > 0.0)) errors.push_back("run.eps must be positive");
  if (c.run.max_iter < 0) errors.push_back("run.max_iter must be nonnegative");
  if (c.run.repetitions < 1) errors.push_back("run.repetitions must be at least 1");
  if (c.run.jobs < 1) errors.push_back("run.jobs must be at least 1");
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw UsageError(msg);
  }
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "leastp-pair" || name == "leastp-family") {
    c.problem.kind = ProblemKind::leastp;
    c.problem.m = 1000;
    c.problem.n = 200;
    c.problem.params.p = 1.5;
    c.solver.c1 = c.solver.c2 = 1.0;
    c.solver.armijo = {name == "leastp-pair" ? 1e-4 : 0.5, 0.5, 1.0, 60};
    if (name == "leastp-pair") {
      c.solver.variants = {{"DEAL-C", SolverKind::dealc, std::nullopt, DirectionKind::gradient, std::nullopt},
                           {"DEAL-A", SolverKind::deala, std::nullopt, DirectionKind::gradient, std::nullopt}};
    } else {
      const std::pair<const char*, std::optional<double>> betas[] = {
          {"", std::nullopt}, {"1", 0.5}, {"2", 0.0}, {"3", -0.2}};
      for (auto solver : {SolverKind::dealc, SolverKind::deala}) {
        for (const auto& [suffix, beta] : betas) {
          std::string n = solver == SolverKind::dealc ? "DEAL-C" : "DEAL-A";
          n += suffix;
          c.solver.variants.push_back({n, solver, beta, DirectionKind::gradient, std::nullopt});
        }
      }
    }
    c.output.directory = "deal-" + name;
  } else if (name == "lasso-boosted") {
    c.problem.kind = ProblemKind::lasso;
    c.problem.m = 1000;
    c.problem.n = 10;
    c.problem.params.lambda = 0.1;
    c.solver.variants = {{"BPGA", SolverKind::bpga, 0.0, DirectionKind::gradient, std::nullopt},
                         {"BPGA-1", SolverKind::bpga, 0.5, DirectionKind::gradient, std::nullopt},
                         {"BPGA-BB1", SolverKind::bpga, 0.0, DirectionKind::bb1, std::nullopt},
                         {"BPGA-BB2", SolverKind::bpga, 0.0, DirectionKind::bb2, std::nullopt},
                         {"BPGA-LBFGS", SolverKind::bpga, 0.0, DirectionKind::lbfgs, std::nullopt}};
    c.output.directory = "deal-lasso-boosted";
  } else if (name == "power-order") {
    c.problem.kind = ProblemKind::power_abs;
    c.problem.m = 1;
    c.problem.n = 1;
    c.problem.params.s = 4.0;
    c.solver.variants = {{"BHiPPA-auto", SolverKind::bhippa, std::nullopt, DirectionKind::zero, std::nullopt},
                         {"BHiPPA-p2", SolverKind::bhippa, std::nullopt, DirectionKind::zero, 2.0}};
    c.output.directory = "deal-power-order";
  } else {
    throw UsageError("unknown preset '" + name + "' (leastp-pair, leastp-family, lasso-boosted, power-order)");
  }
  return c;
}

// ---------------------------------------------------------------- running

bool CertificateBundle::passed() const {
  return std::all_of(certificates.begin(), certificates.end(), [](const CertificateReport& r) { return r.passed; });
}

bool ExperimentResult::all_guaranteed_passed() const {
  return std::all_of(outcomes.begin(), outcomes.end(),
                     [](const VariantOutcome& o) { return !o.bundle.guaranteed || o.bundle.passed(); });
}

GeneratedProblem build_problem(const ProblemSpec& spec) {
  std::uint64_t seed = spec.seed;
  if (const char* env = std::getenv("DEAL_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError(std::string("DEAL_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return generate_problem(seed, spec.kind, spec.m, spec.n, spec.params);
}

namespace {

std::uint64_t problem_seed(const Problem& problem) {
  return std::visit(
      [](const auto& p) -> std::uint64_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, PowerAbsProblem>) return 0;
        else return p.seed;
      },
      problem);
}

DirectionOptions direction_options(const VariantSpec& v, const SolverSpec& s) {
  DirectionOptions o = DirectionOptions::defaults(v.direction);
  if (v.direction == DirectionKind::gradient || v.direction == DirectionKind::zero) {
    o.c1 = s.c1;
    o.c2 = s.c2;
  }
  o.memory = s.memory;
  o.beta = v.beta;
  return o;
}

SmoothObjective smooth_objective(const Problem& problem) {
  if (const auto* lp = std::get_if<LeastPProblem>(&problem)) return to_objective(*lp);
  if (const auto* q = std::get_if<QuadraticProblem>(&problem)) return to_objective(*q);
  throw UsageError("DEAL solvers need a leastp or quadratic problem");
}

std::optional<KLInfo> kl_of(const Problem& problem, const VariantSpec& v) {
  if (v.solver == SolverKind::dealc || v.solver == SolverKind::deala) return smooth_objective(problem).kl;
  return std::nullopt;
}

/// The objective the trace's f and grad_norm refer to.
SmoothObjective traced_objective(const Problem& problem, const VariantSpec& v, const IterateTrace& trace) {
  switch (v.solver) {
    case SolverKind::dealc:
    case SolverKind::deala: return smooth_objective(problem);
    case SolverKind::bpga:
      return fbe_objective(to_composite(std::get<LassoProblem>(problem)), trace.params.at("gamma"));
    case SolverKind::bhippa: {
      const auto& pa = std::get<PowerAbsProblem>(problem);
      return home_objective(to_prox_capable(pa), trace.params.at("gamma"), trace.params.at("p"), pa.n);
    }
  }
  throw UsageError("unknown solver");
}

json rate_to_json(const RateReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"q_hat_max", opt(r.q_hat_max)},
          {"q_hat_ls", opt(r.q_hat_ls)},
          {"q_theory", opt(r.q_theory)},
          {"vartheta_hat", opt(r.vartheta_hat)},
          {"mu_hat", opt(r.mu_hat)},
          {"decay_hat", opt(r.decay_hat)},
          {"linear_residual", r.linear_residual},
          {"sublinear_residual", r.sublinear_residual},
          {"regime", to_string(r.regime)},
          {"tail_window", r.tail_window},
          {"note", r.note}};
}

json complexity_to_json(const ComplexityReport& r) {
  json crit = json::array();
  for (const auto& c : r.criteria) {
    crit.push_back({{"name", c.name},
                    {"measured", c.measured ? json(*c.measured) : json(nullptr)},
                    {"bound", c.bound},
                    {"available", c.available},
                    {"passed", c.passed},
                    {"note", c.note}});
  }
  return {{"q", r.q}, {"vacuous", r.vacuous}, {"passed", r.passed}, {"note", r.note}, {"criteria", crit}};
}

json certificate_to_json(const CertificateReport& r) {
  return {{"name", r.name},
          {"passed", r.passed},
          {"checked", r.checked},
          {"violations", r.violations},
          {"worst_slack", std::isfinite(r.worst_slack) ? json(r.worst_slack) : json(nullptr)},
          {"first_violation", r.first_violation ? json(*r.first_violation) : json(nullptr)},
          {"note", r.note}};
}

CertificateReport rate_bound_check(const IterateTrace& trace, double fstar, double q) {
  CertificateReport rep;
  rep.name = "linear_rate_bound";
  const double floor = gap_floor(fstar);
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const double g0 = trace.records[i].f - fstar, g1 = trace.records[i + 1].f - fstar;
    if (!(g0 > floor)) continue;
    ++rep.checked;
    const double slack = g1 - q * g0 - kDefaultRelTol * std::max(1.0, std::abs(trace.records[i].f));
    rep.worst_slack = std::max(rep.worst_slack, slack);
    if (slack > 0.0) {
      ++rep.violations;
      if (!rep.first_violation) rep.first_violation = i;
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

CertificateReport armijo_bound_check(const IterateTrace& trace) {
  CertificateReport rep;
  rep.name = "armijo_step_bound";
  const double p_bar = trace.params.at("p_bar");
  const double alpha_tilde = trace.params.at("alpha_tilde");
  std::size_t skipped = 0;
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    // Steps whose guaranteed decrease is below the rounding slack of f cannot be resolved.
    if (trace.rho * std::pow(r.grad_norm, trace.theta) <= kDefaultRelTol * std::max(1.0, std::abs(r.f))) {
      ++skipped;
      continue;
    }
    ++rep.checked;
    const double slack = std::max(r.inner_count - p_bar, alpha_tilde * (1.0 - 1e-12) - r.step);
    rep.worst_slack = std::max(rep.worst_slack, slack);
    if (r.inner_count > p_bar + 1e-9 || r.step < alpha_tilde * (1.0 - 1e-12)) {
      ++rep.violations;
      if (!rep.first_violation) rep.first_violation = i;
    }
  }
  rep.passed = rep.violations == 0;
  if (skipped) rep.note = std::to_string(skipped) + " steps below the rounding slack of f were not checked";
  return rep;
}

CertificateReport guarded(const std::string& name, const std::function<CertificateReport()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    CertificateReport r;
    r.name = name;
    r.passed = false;
    r.note = e.what();
    return r;
  }
}

}  // namespace

IterateTrace run_variant(const Problem& problem, const VariantSpec& variant, const ExperimentConfig& config,
                         const Vector& x0) {
  const SolverSpec& s = config.solver;
  const std::string digest = fnv1a_hex(experiment_config_json(config) + "|" + variant.name);
  switch (variant.solver) {
    case SolverKind::dealc:
    case SolverKind::deala: {
      DealConfig dc;
      dc.eps = config.run.eps;
      dc.max_iter = config.run.max_iter;
      dc.direction = direction_options(variant, s);
      dc.armijo = s.armijo;
      dc.store_iterates = config.run.store_iterates;
      dc.seed = problem_seed(problem);
      dc.config_digest = digest;
      const SmoothObjective obj = smooth_objective(problem);
      return variant.solver == SolverKind::dealc ? run_dealc(obj, x0, dc) : run_deala(obj, x0, dc);
    }
    case SolverKind::bpga:
    case SolverKind::bhippa: {
      BoostedConfig bc;
      bc.gamma = s.gamma;
      bc.sigma = s.sigma;
      bc.eta = s.eta;
      bc.alpha_bar = s.alpha_bar;
      bc.max_linesearch = s.max_linesearch;
      bc.direction = direction_options(variant, s);
      bc.eps = config.run.eps;
      bc.max_iter = config.run.max_iter;
      bc.store_iterates = config.run.store_iterates;
      bc.seed = problem_seed(problem);
      bc.config_digest = digest;
      if (variant.solver == SolverKind::bpga) {
        const auto* lasso = std::get_if<LassoProblem>(&problem);
        if (!lasso) throw UsageError("bpga needs a lasso problem");
        return run_bpga(to_composite(*lasso), x0, bc);
      }
      const auto* pa = std::get_if<PowerAbsProblem>(&problem);
      if (!pa) throw UsageError("bhippa needs a power_abs problem");
      bc.p = variant.order ? *variant.order : choose_order(power_abs_kl(*pa).vartheta);
      return run_bhippa(to_prox_capable(*pa), x0, bc);
    }
  }
  throw UsageError("unknown solver");
}

CertificateBundle certify_run(const Problem& problem, const VariantSpec& variant, const IterateTrace& trace,
                              const ReferenceOptimum& optimum) {
  CertificateBundle b;
  b.variant = variant.name;
  b.guaranteed = !trace.heuristic;
  const bool have_x = !trace.empty() && std::all_of(trace.records.begin(), trace.records.end(),
                                                    [](const IterateRecord& r) { return r.x.has_value(); });
  IterateTrace checked = trace;
  if (have_x) checked = reevaluate(trace, traced_objective(problem, variant, trace));
  const double fstar = optimum.fstar;

  if (b.guaranteed) {
    b.certificates.push_back(guarded("descent", [&] { return certify_descent(checked, trace.rho, trace.theta); }));
    if (trace.displacement_c) {
      b.certificates.push_back(guarded(
          "displacement", [&] { return certify_displacement(checked, *trace.displacement_c, trace.theta); }));
    }
    b.certificates.push_back(guarded(
        "min_grad_bound", [&] { return min_grad_bound_check(checked, trace.rho, trace.theta, fstar); }));
    if (variant.solver == SolverKind::deala) {
      b.certificates.push_back(guarded("armijo_step_bound", [&] { return armijo_bound_check(trace); }));
    }
  } else {
    CertificateReport mono = guarded("monotone", [&] { return certify_monotone(checked); });
    mono.note = "heuristic run; certified constants do not apply, reported only";
    mono.passed = true;
    b.certificates.push_back(mono);
  }

  RateReport rate;
  try {
    rate = fit_linear_rate(checked, std::min(fstar, checked.records.back().f));
  } catch (const Error& e) {
    rate.note = e.what();
  }
  const auto kl = kl_of(problem, variant);
  if (kl && b.guaranteed) {
    const double q = 1.0 - trace.rho / std::pow(kl->tau, trace.theta);
    if (q > 0.0 && q < 1.0) rate.q_theory = q;
    const bool matched = std::abs(trace.theta * kl->vartheta - 1.0) < 1e-9;
    if (matched && rate.q_theory) {
      b.certificates.push_back(guarded("linear_rate_bound", [&] { return rate_bound_check(checked, fstar, q); }));
    }
    if (matched) {
      ComplexityInputs in;
      in.fstar = fstar;
      in.rho = trace.rho;
      in.theta = trace.theta;
      in.tau = kl->tau;
      in.eps = 1e-6;
      in.xstar = optimum.xstar;
      in.c = trace.displacement_c;
      try {
        const ComplexityReport cr = verify_complexity(checked, in);
        b.complexity_json = complexity_to_json(cr).dump();
        CertificateReport r;
        r.name = "complexity";
        r.passed = cr.passed;
        r.checked = cr.criteria.size();
        r.note = cr.vacuous ? cr.note : "";
        b.certificates.push_back(r);
      } catch (const Error& e) {
        b.complexity_json = json{{"error", e.what()}}.dump();
      }
    }
  }
  b.rate_json = rate_to_json(rate).dump();
  return b;
}

namespace {

json bundle_to_json(const CertificateBundle& b) {
  json certs = json::array();
  for (const auto& c : b.certificates) certs.push_back(certificate_to_json(c));
  return {{"variant", b.variant},
          {"repetition", b.repetition},
          {"guaranteed", b.guaranteed},
          {"passed", b.passed()},
          {"certificates", certs},
          {"rate", b.rate_json.empty() ? json(nullptr) : json::parse(b.rate_json)},
          {"complexity", b.complexity_json.empty() ? json(nullptr) : json::parse(b.complexity_json)}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::size_t problem_dim(const Problem& problem) {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PowerAbsProblem>) return p.n;
        else if constexpr (std::is_same_v<T, QuadraticProblem>) return static_cast<std::size_t>(p.Q.cols());
        else return static_cast<std::size_t>(p.A.cols());
      },
      problem);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const fs::path dir = config.output.directory;
  fs::create_directories(dir);
  const GeneratedProblem gp = build_problem(config.problem);
  ExperimentResult result;
  result.directory = dir;
  result.optimum = reference_optimum(gp.problem);

  json pj = json::parse(problem_descriptor_json(gp.problem, config.problem.params));
  pj["regenerations"] = gp.regenerations;
  pj["reference"] = {{"fstar", result.optimum.fstar},
                     {"method", result.optimum.method},
                     {"low_confidence", result.optimum.low_confidence}};
  write_text(dir / "problem.json", pj.dump(2));
  write_text(dir / "config.json", experiment_config_json(config));

  struct Job {
    const VariantSpec* variant;
    int rep;
  };
  std::vector<Job> jobs;
  for (int rep = 0; rep < config.run.repetitions; ++rep)
    for (const auto& v : config.solver.variants) jobs.push_back({&v, rep});

  const std::size_t n = problem_dim(gp.problem);
  auto work = [&](const Job& job) {
    const Vector x0 = default_start(static_cast<Eigen::Index>(n), config.run.x0_seed + static_cast<std::uint64_t>(job.rep));
    VariantOutcome o;
    o.variant = job.variant->name;
    o.repetition = job.rep;
    o.trace = run_variant(gp.problem, *job.variant, config, x0);
    o.bundle = certify_run(gp.problem, *job.variant, o.trace, result.optimum);
    o.bundle.repetition = job.rep;
    o.iterations = o.trace.records.empty() ? 0 : static_cast<std::size_t>(o.trace.records.back().k);
    o.termination = o.trace.termination;
    o.final_grad_norm = o.trace.records.empty() ? 0.0 : o.trace.records.back().grad_norm;
    const std::string stem = o.variant + ".r" + std::to_string(job.rep);
    save_trace(dir / (stem + ".csv"), o.trace);
    write_text(dir / (stem + ".cert.json"), bundle_to_json(o.bundle).dump(2));
    return o;
  };

  const std::size_t workers = static_cast<std::size_t>(std::max(1, config.run.jobs));
  result.outcomes.resize(jobs.size());
  for (std::size_t start = 0; start < jobs.size(); start += workers) {
    std::vector<std::future<VariantOutcome>> futures;
    const std::size_t end = std::min(jobs.size(), start + workers);
    for (std::size_t i = start; i < end; ++i) {
      futures.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, work, jobs[i]));
    }
    for (std::size_t i = start; i < end; ++i) result.outcomes[i] = futures[i - start].get();
  }

  json summary;
  summary["fstar"] = result.optimum.fstar;
  summary["fstar_low_confidence"] = result.optimum.low_confidence;
  json runs = json::array();
  for (const auto& o : result.outcomes) {
    runs.push_back({{"variant", o.variant},
                    {"repetition", o.repetition},
                    {"solver", o.trace.solver_id},
                    {"iterations", o.iterations},
                    {"termination", o.termination},
                    {"final_grad_norm", o.final_grad_norm},
                    {"fallbacks", o.trace.fallbacks},
                    {"heuristic", o.trace.heuristic},
                    {"guaranteed", o.bundle.guaranteed},
                    {"certificates_passed", o.bundle.passed()}});
  }
  summary["runs"] = runs;
  summary["all_guaranteed_passed"] = result.all_guaranteed_passed();
  write_text(dir / "summary.json", summary.dump(2));
  emit_plot_data(dir);
  return result;
}

fs::path emit_plot_data(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw DataError("run directory does not exist: " + run_dir.string());
  std::vector<fs::path> traces;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const fs::path& p = entry.path();
    const std::string name = p.filename().string();
    if (p.extension() != ".csv" || name == "series.csv") continue;
    if (name.size() > 13 && name.compare(name.size() - 13, 13, ".iterates.csv") == 0) continue;
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header == kTraceCsvHeader) traces.push_back(p);
  }
  if (traces.empty()) throw DataError("no traces found in " + run_dir.string());
  std::sort(traces.begin(), traces.end());

  std::vector<std::pair<std::string, IterateTrace>> loaded;
  for (const auto& p : traces) {
    std::ifstream in(p, std::ios::binary);
    loaded.emplace_back(p.stem().string(), read_trace_csv(in));
  }
  std::optional<double> fstar;
  if (fs::exists(run_dir / "summary.json")) {
    std::ifstream in(run_dir / "summary.json");
    const json s = json::parse(in, nullptr, false);
    if (s.is_object() && s.contains("fstar") && s["fstar"].is_number()) fstar = s["fstar"].get<double>();
  }
  if (!fstar) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [name, t] : loaded)
      for (const auto& r : t.records) m = std::min(m, r.f);
    fstar = m;
  }
  const fs::path out_path = run_dir / "series.csv";
  std::ofstream out(out_path, std::ios::binary);
  out << "variant,k,f_gap,grad_norm\n";
  for (const auto& [name, t] : loaded) {
    for (const auto& r : t.records) {
      out << name << ',' << r.k << ',' << format_double(r.f - *fstar) << ',' << format_double(r.grad_norm) << '\n';
    }
  }
  return out_path;
}

}  // namespace deal
