#include "gmd/optimizer.hpp"

#include <cmath>

#include "gmd/rng.hpp"

namespace gmd {

ScheduleRule schedule_rule_from_string(const std::string& tag) {
  if (tag == "fixed") return ScheduleRule::kFixed;
  if (tag == "thm1") return ScheduleRule::kThm1;
  if (tag == "thm2") return ScheduleRule::kThm2;
  if (tag == "thm3") return ScheduleRule::kThm3;
  if (tag == "adagrad-c1") return ScheduleRule::kAdagradC1;
  if (tag == "adagrad-c2") return ScheduleRule::kAdagradC2;
  throw std::invalid_argument("unknown schedule rule: " + tag);
}

std::string to_string(ScheduleRule rule) {
  switch (rule) {
    case ScheduleRule::kFixed: return "fixed";
    case ScheduleRule::kThm1: return "thm1";
    case ScheduleRule::kThm2: return "thm2";
    case ScheduleRule::kThm3: return "thm3";
    case ScheduleRule::kAdagradC1: return "adagrad-c1";
    case ScheduleRule::kAdagradC2: return "adagrad-c2";
  }
  return "?";
}

std::string to_string(Mode m) { return m == Mode::kFull ? "full" : "stochastic"; }

double eta_thm1(double alpha_l, double L, double safety) {
  if (!(alpha_l > 0.0) || !(L > 0.0) || !(safety > 0.0) || safety > 1.0)
    throw std::invalid_argument("eta_thm1: need alpha_l, L > 0 and safety in (0, 1]");
  return safety * alpha_l / L;
}

double eta_thm2(double alpha_l, double alpha_u, double L, double grad_norm, std::size_t d,
                double safety) {
  if (!(alpha_l > 0.0) || !(alpha_u > 0.0) || !(L > 0.0) || !(safety > 0.0) || safety > 1.0)
    throw std::invalid_argument("eta_thm2: invalid constants");
  const double first = 4.0 * alpha_l * alpha_l / (5.0 * L * alpha_u);
  if (!(grad_norm > 0.0)) return safety * first;  // adaptive branch vacuous at a critical point
  const double second = 1.0 / (2.0 * std::sqrt(static_cast<double>(d)) * grad_norm);
  return safety * std::min(first, second);
}

double eta_thm3(double mu, double alpha_l, double alpha_u, double L, double sample_grad_norm,
                std::size_t d, double safety) {
  if (!(mu > 0.0)) throw std::invalid_argument("eta_thm3: need mu > 0");
  // same shape as eta_thm2 with first branch scaled by mu / L
  return eta_thm2(alpha_l, alpha_u, L * L / mu, sample_grad_norm, d, safety);
}

double eta_adagrad_c1(const AdagradState& state, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("eta_adagrad_c1: need L > 0");
  return adagrad_bounds(state).alpha_l / L;
}

bool check_adagrad_c2(const AdagradState& state0, double L, double mu, double f0) {
  if (!(f0 > 0.0)) throw std::invalid_argument("check_adagrad_c2: need f0 > 0");
  const double al0 = adagrad_bounds(state0).alpha_l;
  return al0 * al0 / (2.0 * L * f0) > L / mu;
}

bool check_monotone_gradient_condition(double mu, double L, double alpha_l, double alpha_u) {
  if (!(mu > 0.0) || !(L > 0.0) || !(alpha_l > 0.0) || !(alpha_u > 0.0))
    throw std::invalid_argument("check_monotone_gradient_condition: inputs must be positive");
  const double au2 = alpha_u * alpha_u, al2 = alpha_l * alpha_l;
  return mu / L > (4.0 * au2 + al2) / (4.0 * au2 + 2.0 * al2);
}

Vec gmd_step(const Vec& w, const MirrorMap& mirror, int t, const Vec& grad, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gmd_step: eta must be positive");
  if (grad.size() != w.size()) throw std::invalid_argument("gmd_step: size mismatch");
  bool zero = true;
  for (double g : grad)
    if (g != 0.0) { zero = false; break; }
  if (zero) return w;  // exact fixed point, skip the inversion round-trip
  Vec z = mirror.forward(t, w);
  axpy(-eta, grad, z);
  Vec next = mirror.inverse(t, z);
  require_finite(next, "gmd_step");
  return next;
}

namespace {

// eta for step t, or nullopt when no admissible positive step exists (zero
// gradient under the heuristic smoothness estimate).
std::optional<double> schedule_eta(const Schedule& s, const MirrorBounds& b,
                                   const AdagradMirror* adagrad, double f, double grad_norm,
                                   double step_grad_norm, std::size_t d, int t,
                                   double& fixed_c2_eta) {
  double L = s.L;
  if (s.use_smoothness_heuristic) {
    if (!(f > 0.0)) return std::nullopt;
    L = 0.99 * grad_norm * grad_norm / (2.0 * f);
    if (!(L > 0.0)) return std::nullopt;  // flat point: heuristic degenerates
  }
  switch (s.rule) {
    case ScheduleRule::kFixed:
      return s.eta0;
    case ScheduleRule::kThm1:
      return eta_thm1(b.alpha_l, L, s.safety);
    case ScheduleRule::kThm2: {
      const double branch = s.adaptive_branch_uses_loss ? f : grad_norm;
      return eta_thm2(b.alpha_l, b.alpha_u, L, branch, d, s.safety);
    }
    case ScheduleRule::kThm3: {
      const double branch = s.adaptive_branch_uses_loss ? f : step_grad_norm;
      return eta_thm3(s.mu, b.alpha_l, b.alpha_u, L, branch, d, s.safety);
    }
    case ScheduleRule::kAdagradC1:
      if (adagrad == nullptr)
        throw std::invalid_argument("adagrad-c1 schedule requires the adagrad mirror");
      return eta_adagrad_c1(adagrad->state(), L);
    case ScheduleRule::kAdagradC2:
      if (adagrad == nullptr)
        throw std::invalid_argument("adagrad-c2 schedule requires the adagrad mirror");
      if (t == 0) fixed_c2_eta = eta_adagrad_c1(adagrad->state(), L);
      return fixed_c2_eta;
  }
  return std::nullopt;
}

}  // namespace

Trace run(const Problem& problem, MirrorMap& mirror, const Schedule& schedule, const Vec& w0,
          const RunOptions& options) {
  if (options.steps < 1) throw std::invalid_argument("run: steps must be >= 1");
  if (schedule.rule == ScheduleRule::kFixed && !(schedule.eta0 > 0.0))
    throw std::invalid_argument("run: fixed schedule needs eta0 > 0");
  if (w0.size() != problem.dim()) throw std::invalid_argument("run: w0 dimension mismatch");
  require_finite(w0, "run initial point");

  auto* adagrad = dynamic_cast<AdagradMirror*>(&mirror);
  if (adagrad != nullptr && options.keep_iterates) adagrad->set_history_tracking(true);

  Trace trace;
  trace.initial_w = w0;
  trace.seed = options.seed;
  trace.mode = options.mode;
  trace.label = options.label;
  if (options.keep_iterates) trace.iterates.push_back(w0);

  Rng rng(options.seed);
  Vec w = w0;
  double f = problem.value(w);
  const double f0 = f;
  const double stop = options.stop_loss >= 0.0 ? options.stop_loss : 1e-14 * f0;
  const double guard = 1e12 * std::max(f0, 1e-300);
  const std::size_t n = problem.n_samples();
  const std::size_t d = problem.dim();

  Vec dual_origin;
  double fixed_c2_eta = 0.0;
  int t = 0;
  bool stopped = f <= stop;

  while (!stopped && t < options.steps) {
    const Vec g_full = problem.grad(w);
    const double grad_norm = norm(g_full);

    std::optional<std::int64_t> sample_index;
    std::optional<double> sample_grad_norm;
    const Vec* g_step = &g_full;
    Vec g_sample;
    if (options.mode == Mode::kStochastic) {
      const std::size_t i = static_cast<std::size_t>(rng.below(n));
      g_sample = problem.sample_grad(i, w);
      sample_index = static_cast<std::int64_t>(i);
      sample_grad_norm = norm(g_sample);
      g_step = &g_sample;
    }

    mirror.accumulate(*g_step);
    const MirrorBounds b = mirror.bounds(t);
    if (t == 0) dual_origin = mirror.forward(0, w);

    const auto eta = schedule_eta(schedule, b, adagrad, f, grad_norm,
                                  sample_grad_norm.value_or(grad_norm), d, t, fixed_c2_eta);
    if (!eta.has_value()) break;  // no admissible step; final record flags the state

    Vec w_next = gmd_step(w, mirror, t, *g_step, *eta);
    const double disp = norm(sub(mirror.forward(t, w_next), dual_origin));
    const double f_next = problem.value(w_next);

    TraceRecord rec;
    rec.t = t;
    rec.loss = f;
    rec.grad_norm = grad_norm;
    rec.sample_grad_norm = sample_grad_norm;
    rec.eta = *eta;
    rec.sample_index = sample_index;
    rec.dual_displacement = disp;
    rec.alpha_l = b.alpha_l;
    rec.alpha_u = b.alpha_u;
    trace.records.push_back(std::move(rec));

    w = std::move(w_next);
    f = f_next;
    if (options.keep_iterates) trace.iterates.push_back(w);
    ++t;
    if (f > guard) throw DivergenceError(t, f, f0);
    if (f <= stop) stopped = true;
  }

  TraceRecord last;
  last.t = t;
  last.loss = f;
  last.grad_norm = norm(problem.grad(w));
  const MirrorBounds bl = mirror.bounds(t > 0 ? t - 1 : 0);
  last.alpha_l = bl.alpha_l;
  last.alpha_u = bl.alpha_u;
  trace.records.push_back(std::move(last));
  trace.final_w = std::move(w);
  return trace;
}

}  // namespace gmd
