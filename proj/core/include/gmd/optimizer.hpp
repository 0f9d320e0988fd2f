#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmd/mirrors.hpp"
#include "gmd/problems.hpp"
#include "gmd/tensor.hpp"

namespace gmd {

// Step-size rules. `fixed` uses eta0; the others evaluate the corresponding
// closed-form rate from the problem constants and the mirror bounds at each
// step.
enum class ScheduleRule { kFixed, kThm1, kThm2, kThm3, kAdagradC1, kAdagradC2 };

ScheduleRule schedule_rule_from_string(const std::string& tag);
std::string to_string(ScheduleRule rule);

struct Schedule {
  ScheduleRule rule = ScheduleRule::kFixed;
  double eta0 = 0.0;    // fixed rule
  double L = 0.0;       // smoothness constant fed to the rate formulas
  double mu = 0.0;      // thm3 rule
  double safety = 1.0;  // scales the emitted rate; rules with strict bounds default to 0.99
  // Adaptive branch of thm2/thm3: false = 1/(2 sqrt(d) |grad|) (the form the
  // derivations use), true = 1/(2 sqrt(d) |f|) (the literal statement).
  bool adaptive_branch_uses_loss = false;
  // Recompute L each step as 0.99 |grad f|^2 / (2 f); for losses whose exact
  // smoothness constant is unavailable.
  bool use_smoothness_heuristic = false;
};

// eta = safety * alpha_l / L  (admissible interior point of (0, 2 alpha_l / L)).
double eta_thm1(double alpha_l, double L, double safety = 1.0);
// eta = safety * min(4 alpha_l^2 / (5 L alpha_u), 1 / (2 sqrt(d) grad_norm)).
double eta_thm2(double alpha_l, double alpha_u, double L, double grad_norm, std::size_t d,
                double safety = 0.99);
// eta = safety * min(4 mu alpha_l^2 / (5 L^2 alpha_u), 1 / (2 sqrt(d) sample_grad_norm));
// L is the per-sample smoothness supremum.
double eta_thm3(double mu, double alpha_l, double alpha_u, double L, double sample_grad_norm,
                std::size_t d, double safety = 0.99);
// eta = sqrt(min_i accum_i + eps) / L.
double eta_adagrad_c1(const AdagradState& state, double L);
// Admissibility of the fixed accumulator step eta = alpha_l(0)/L:
// alpha_l(0)^2 / (2 L f0) > L / mu.
bool check_adagrad_c2(const AdagradState& state0, double L, double mu, double f0);
// Fixed-step monotone-gradient condition mu/L > (4 au^2 + al^2)/(4 au^2 + 2 al^2).
bool check_monotone_gradient_condition(double mu, double L, double alpha_l, double alpha_u);

// One dual-space descent step: inverse(t, forward(t, w) - eta * grad).
Vec gmd_step(const Vec& w, const MirrorMap& mirror, int t, const Vec& grad, double eta);

enum class Mode { kFull, kStochastic };

std::string to_string(Mode m);

struct TraceRecord {
  int t = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> sample_grad_norm;  // stochastic steps only
  std::optional<double> eta;               // absent on the final record
  std::optional<std::int64_t> sample_index;
  std::optional<double> dual_displacement;  // |phi^t(w^{t+1}) - phi^0(w^0)|
  double alpha_l = 0.0;
  double alpha_u = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;  // steps 0..T-1 plus a final record at T
  Vec initial_w;
  Vec final_w;
  std::uint64_t seed = 0;
  Mode mode = Mode::kFull;
  std::string label;
  std::vector<Vec> iterates;  // w^0..w^T when keep_iterates was set

  double initial_loss() const { return records.front().loss; }
  double final_loss() const { return records.back().loss; }
};

struct RunOptions {
  int steps = 1;
  Mode mode = Mode::kFull;
  std::uint64_t seed = 0;
  // Absolute early-stop threshold; negative selects the default
  // 1e-14 * initial loss.
  double stop_loss = -1.0;
  bool keep_iterates = false;
  std::string label;
};

// Raised when the loss exceeds 1e12 times its initial value.
struct DivergenceError : std::runtime_error {
  DivergenceError(int t, double loss, double initial)
      : std::runtime_error("divergence at step " + std::to_string(t) + ": loss " +
                           std::to_string(loss) + " vs initial " + std::to_string(initial)),
        step(t), loss_value(loss), initial_loss(initial) {}
  int step;
  double loss_value;
  double initial_loss;
};

// Deterministic descent loop. Stochastic mode draws the sample index uniformly
// from Rng(seed); the accumulator mirror consumes exactly the gradient used
// for the step. The dual origin phi^0(w^0) is evaluated after the first
// accumulation.
Trace run(const Problem& problem, MirrorMap& mirror, const Schedule& schedule, const Vec& w0,
          const RunOptions& options);

}  // namespace gmd
