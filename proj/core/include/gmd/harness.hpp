#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gmd/analysis.hpp"
#include "gmd/config.hpp"
#include "gmd/mirrors.hpp"
#include "gmd/optimizer.hpp"
#include "gmd/problems.hpp"

namespace gmd {

// X entries i.i.d. standard normal, planted parameter i.i.d. standard normal,
// y = X w + noise * u with u i.i.d. uniform(-1, 1). Draw order: X row-major,
// then the planted parameter, then u. noiseless flag <=> noise == 0.
Dataset generate_regression(std::size_t n, std::size_t d, std::uint64_t seed, double noise);

struct ProblemSpec {
  std::string kind = "regression";  // regression | mlp
  std::size_t n = 0, d = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t hidden = 0;            // mlp
  std::string activation = "leaky-relu";
  std::uint64_t init_seed = 0;       // mlp weight init
};

struct MirrorSpec {
  std::string kind = "identity";  // identity | linear | tanh | adagrad
  std::vector<double> diag;       // linear: explicit diagonal entries, or
  double diag_min = 0.0;          // ...a linspace over the problem dimension
  double diag_max = 0.0;
  double beta = 0.5;              // tanh
  double epsilon = 1e-12;         // adagrad
};

struct ScheduleSpec {
  std::string rule = "thm1";
  double eta0 = 0.1;
  double safety = -1.0;  // negative: rule default (1 for thm1, 0.99 otherwise)
  bool adaptive_branch_uses_loss = false;
  std::string l_source = "exact";  // exact | heuristic
};

struct InitSpec {
  // zeros | gaussian (sigma, seed) | interp_offset (minimum-norm interpolant
  // plus sigma * random-sign vector; regression only)
  std::string kind = "zeros";
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

struct VerifyFlags {
  bool contraction = false;
  bool containment = false;
  bool implicit_reg = false;
  bool pl_check = false;
  bool any() const { return contraction || containment || implicit_reg || pl_check; }
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  MirrorSpec mirror;
  ScheduleSpec schedule;
  InitSpec init;
  int steps = 100;
  std::string mode = "full";  // full | stochastic
  std::vector<std::uint64_t> seeds = {0};
  double stop_loss_rel = 1e-14;  // relative to the initial loss; 0 disables
  VerifyFlags verify;

  static ExperimentConfig from_config(const KeyValueConfig& kv);
};

struct CheckRow {
  std::string run_id;
  std::string check;
  double value = 0.0;
  double bound = 0.0;
  bool ok = true;
  bool asserted = true;  // report-only checks don't fail the batch
  std::string note;
};

struct ExperimentResult {
  std::vector<Trace> traces;
  std::vector<CheckRow> checks;
  bool all_ok = true;
  double L = 0.0, mu = 0.0;          // problem constants (exact losses only)
  std::vector<std::string> errors;   // aborted runs (divergence) etc.
};

// Builders shared by the CLI and the test suites.
Dataset build_dataset(const ProblemSpec& spec);
std::unique_ptr<Problem> build_problem(const ProblemSpec& spec, Dataset data);
std::unique_ptr<MirrorMap> build_mirror(const MirrorSpec& spec, std::size_t dim);
Vec build_initial_point(const InitSpec& spec, const ExperimentConfig& cfg, const Dataset& data,
                        const Problem& problem);
Schedule build_schedule(const ExperimentConfig& cfg, const Dataset& data, const Problem& problem);

// Executes one trace per seed, attaches the enabled verification checks, and
// returns everything; deterministic per config. Aborted runs are recorded in
// `errors` and fail the batch.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// --- persistence -------------------------------------------------------------

// Fixed header run_id,seed,t,loss,grad_norm,sample_grad_norm,eta,sample_index,
// dual_displacement,alpha_l,alpha_u; shortest round-trip float formatting;
// missing fields empty.
std::string traces_to_csv(const std::vector<Trace>& traces);
void write_file(const std::string& path, const std::string& content);
std::vector<Trace> parse_traces_csv(const std::string& csv);

std::string checks_to_csv(const std::vector<CheckRow>& checks);
std::string checks_to_text(const std::vector<CheckRow>& checks);

enum class PlotStyle { kLinear, kLogLoss };

// Standalone SVG, one polyline per trace, legend from trace labels; loss
// values are floored at 1e-16 on the log axis. Deterministic output.
std::string emit_svg(const std::vector<Trace>& traces, PlotStyle style);

// Output directory resolution: $GMD_OUT_DIR, else ".".
std::string output_dir();

// Runs the experiment and writes <name>.csv / <name>_checks.csv /
// <name>_report.txt / <name>.svg under dir. Returns the result.
ExperimentResult run_and_persist(const ExperimentConfig& cfg, const std::string& dir);

}  // namespace gmd
