#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deal/boosted.hpp"
#include "deal/certificates.hpp"
#include "deal/directions.hpp"
#include "deal/problems.hpp"
#include "deal/solvers.hpp"

namespace deal {

enum class SolverKind { dealc, deala, bpga, bhippa };
SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::leastp;
  std::size_t m = 1000;
  std::size_t n = 200;
  ProblemParams params;
  std::uint64_t seed = 42;
};

struct VariantSpec {
  std::string name;
  SolverKind solver = SolverKind::dealc;
  std::optional<double> beta;  ///< empty = auto
  DirectionKind direction = DirectionKind::gradient;
  std::optional<double> order;  ///< BHiPPA p; empty = auto from the KL exponent
};

struct SolverSpec {
  std::vector<VariantSpec> variants;
  double c1 = 1.0;
  double c2 = 1.0;
  ArmijoParams armijo;
  std::optional<double> gamma;
  std::optional<double> sigma;
  double eta = 0.5;
  double alpha_bar = 0.5;
  int max_linesearch = 50;
  int memory = 5;
};

struct RunSpec {
  double eps = 1e-6;
  int max_iter = 10000;
  std::uint64_t x0_seed = 1;
  int repetitions = 1;
  bool store_iterates = true;
  int jobs = 1;
};

struct OutputSpec {
  std::filesystem::path directory = "deal-run";
};

struct ExperimentConfig {
  ProblemSpec problem;
  SolverSpec solver;
  RunSpec run;
  OutputSpec output;
};

/// Parses a JSON config; unknown or ill-typed keys raise UsageError listing them.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_json(const ExperimentConfig& config);
/// JSON schema describing the accepted config document.
std::string experiment_config_schema();
void validate(const ExperimentConfig& config);

/// "leastp-pair", "leastp-family" (LeastP, DEAL-C/A families), "lasso-boosted" (LASSO, BPGA family),
/// "power-order" (PowerAbs, BHiPPA order matching).
ExperimentConfig preset(const std::string& name);

struct CertificateBundle {
  std::string variant;
  int repetition = 0;
  bool guaranteed = true;
  std::vector<CertificateReport> certificates;
  std::string rate_json;
  std::string complexity_json;
  bool passed() const;
};

struct VariantOutcome {
  std::string variant;
  int repetition = 0;
  std::size_t iterations = 0;
  std::string termination;
  double final_grad_norm = 0.0;
  CertificateBundle bundle;
  IterateTrace trace;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<VariantOutcome> outcomes;
  ReferenceOptimum optimum;
  bool all_guaranteed_passed() const;
};

/// The instance a config describes (honours DEAL_SEED).
GeneratedProblem build_problem(const ProblemSpec& spec);

/// Runs one variant on an already generated problem.
IterateTrace run_variant(const Problem& problem, const VariantSpec& variant,
                         const ExperimentConfig& config, const Vector& x0);

/// Checks a finished trace: descent, displacement (guaranteed runs), min-grad
/// bound, rate fit and complexity when KL constants are available.
CertificateBundle certify_run(const Problem& problem, const VariantSpec& variant,
                              const IterateTrace& trace, const ReferenceOptimum& optimum);

/// Runs every (variant, repetition), writes traces, sidecars, certificate
/// bundles, summary.json and series.csv under config.output.directory.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes series.csv (variant,k,f_gap,grad_norm) from the traces in run_dir.
std::filesystem::path emit_plot_data(const std::filesystem::path& run_dir);

}  // namespace deal
