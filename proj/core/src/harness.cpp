#include "gmd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gmd/rng.hpp"

namespace gmd {

Dataset generate_regression(std::size_t n, std::size_t d, std::uint64_t seed, double noise) {
  if (n < 1 || d < 1) throw std::invalid_argument("generate_regression: n, d must be >= 1");
  if (noise < 0.0) throw std::invalid_argument("generate_regression: noise must be >= 0");
  Rng rng(seed);
  Dataset ds;
  ds.x = Mat(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ds.x(i, j) = rng.gaussian();
  Vec planted(d);
  for (std::size_t j = 0; j < d; ++j) planted[j] = rng.gaussian();
  ds.y = matvec(ds.x, planted);
  if (noise > 0.0)
    for (std::size_t i = 0; i < n; ++i) ds.y[i] += noise * rng.uniform(-1.0, 1.0);
  ds.noiseless = noise == 0.0;
  return ds;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  cfg.name = kv.get_or("name", "experiment");
  cfg.problem.kind = kv.get_or("problem.kind", "regression");
  cfg.problem.n = static_cast<std::size_t>(kv.get_int("problem.n"));
  cfg.problem.d = static_cast<std::size_t>(kv.get_int("problem.d"));
  cfg.problem.noise = kv.get_double_or("problem.noise", 0.0);
  cfg.problem.seed = static_cast<std::uint64_t>(kv.get_int_or("problem.seed", 0));
  cfg.problem.hidden = static_cast<std::size_t>(kv.get_int_or("problem.hidden", 0));
  cfg.problem.activation = kv.get_or("problem.activation", "leaky-relu");
  cfg.problem.init_seed = static_cast<std::uint64_t>(kv.get_int_or("problem.init_seed", 0));

  cfg.mirror.kind = kv.get_or("mirror.kind", "identity");
  if (kv.has("mirror.diag")) cfg.mirror.diag = kv.get_list("mirror.diag");
  cfg.mirror.diag_min = kv.get_double_or("mirror.diag_min", 0.0);
  cfg.mirror.diag_max = kv.get_double_or("mirror.diag_max", 0.0);
  cfg.mirror.beta = kv.get_double_or("mirror.beta", 0.5);
  cfg.mirror.epsilon = kv.get_double_or("mirror.epsilon", 1e-12);

  cfg.schedule.rule = kv.get_or("schedule.rule", "thm1");
  cfg.schedule.eta0 = kv.get_double_or("schedule.eta0", 0.1);
  cfg.schedule.safety = kv.get_double_or("schedule.safety", -1.0);
  cfg.schedule.adaptive_branch_uses_loss =
      kv.get_or("schedule.adaptive_branch", "grad") == "loss";
  cfg.schedule.l_source = kv.get_or("schedule.l_source", "exact");

  cfg.init.kind = kv.get_or("init.kind", cfg.problem.kind == "mlp" ? "mlp" : "zeros");
  cfg.init.sigma = kv.get_double_or("init.sigma", 1.0);
  cfg.init.seed = static_cast<std::uint64_t>(kv.get_int_or("init.seed", 0));

  cfg.steps = static_cast<int>(kv.get_int_or("run.steps", 100));
  cfg.mode = kv.get_or("run.mode", "full");
  if (kv.has("run.seeds")) {
    cfg.seeds.clear();
    for (std::int64_t s : kv.get_int_list("run.seeds"))
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  cfg.stop_loss_rel = kv.get_double_or("run.stop_loss_rel", 1e-14);

  cfg.verify.contraction = kv.get_bool_or("verify.contraction", false);
  cfg.verify.containment = kv.get_bool_or("verify.containment", false);
  cfg.verify.implicit_reg = kv.get_bool_or("verify.implicit_reg", false);
  cfg.verify.pl_check = kv.get_bool_or("verify.pl_check", false);

  if (cfg.seeds.empty()) throw std::invalid_argument("config: run.seeds must be nonempty");
  if (cfg.mode != "full" && cfg.mode != "stochastic")
    throw std::invalid_argument("config: run.mode must be full or stochastic");
  return cfg;
}

Dataset build_dataset(const ProblemSpec& spec) {
  return generate_regression(spec.n, spec.d, spec.seed, spec.noise);
}

std::unique_ptr<Problem> build_problem(const ProblemSpec& spec, Dataset data) {
  if (spec.kind == "regression") return mse_problem(std::move(data));
  if (spec.kind == "mlp") {
    if (spec.hidden < 1) throw std::invalid_argument("mlp problem needs problem.hidden >= 1");
    return mlp_problem(std::move(data), spec.hidden, activation_from_string(spec.activation),
                       spec.init_seed);
  }
  throw std::invalid_argument("unknown problem kind: " + spec.kind);
}

std::unique_ptr<MirrorMap> build_mirror(const MirrorSpec& spec, std::size_t dim) {
  if (spec.kind == "identity") return identity_mirror();
  if (spec.kind == "tanh") return tanh_mirror(spec.beta);
  if (spec.kind == "adagrad") return adagrad_mirror(dim, spec.epsilon);
  if (spec.kind == "linear") {
    Vec diag = spec.diag;
    if (diag.empty()) {
      if (!(spec.diag_max >= spec.diag_min) || !(spec.diag_min > 0.0))
        throw std::invalid_argument("linear mirror needs mirror.diag or diag_min/diag_max");
      diag.resize(dim);
      for (std::size_t i = 0; i < dim; ++i)
        diag[i] = dim == 1 ? spec.diag_min
                           : spec.diag_min + (spec.diag_max - spec.diag_min) *
                                                 static_cast<double>(i) /
                                                 static_cast<double>(dim - 1);
    }
    if (diag.size() != dim) throw std::invalid_argument("linear mirror diagonal size mismatch");
    Mat g(dim, dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) g(i, i) = diag[i];
    return linear_mirror(std::move(g));
  }
  throw std::invalid_argument("unknown mirror kind: " + spec.kind);
}

Vec build_initial_point(const InitSpec& spec, const ExperimentConfig& cfg, const Dataset& data,
                        const Problem& problem) {
  if (spec.kind == "zeros") return Vec(problem.dim(), 0.0);
  if (spec.kind == "mlp") {
    const auto* mlp = dynamic_cast<const MlpProblem*>(&problem);
    if (mlp == nullptr) throw std::invalid_argument("init.kind = mlp needs an mlp problem");
    return mlp->initial_params();
  }
  if (spec.kind == "gaussian") {
    Rng rng(spec.seed);
    Vec w(problem.dim());
    for (auto& v : w) v = spec.sigma * rng.gaussian();
    return w;
  }
  if (spec.kind == "interp_offset") {
    if (cfg.problem.kind != "regression")
      throw std::invalid_argument("init.kind = interp_offset applies to regression only");
    Vec w = min_norm_interpolant(data.x, data.y, Vec(problem.dim(), 0.0));
    Rng rng(spec.seed);
    for (auto& v : w) v += spec.sigma * rng.rademacher();
    return w;
  }
  throw std::invalid_argument("unknown init kind: " + spec.kind);
}

Schedule build_schedule(const ExperimentConfig& cfg, const Dataset& data, const Problem& problem) {
  Schedule s;
  s.rule = schedule_rule_from_string(cfg.schedule.rule);
  s.eta0 = cfg.schedule.eta0;
  s.adaptive_branch_uses_loss = cfg.schedule.adaptive_branch_uses_loss;
  s.use_smoothness_heuristic = cfg.schedule.l_source == "heuristic";
  if (cfg.schedule.l_source != "exact" && cfg.schedule.l_source != "heuristic")
    throw std::invalid_argument("schedule.l_source must be exact or heuristic");
  s.safety = cfg.schedule.safety > 0.0
                 ? cfg.schedule.safety
                 : (s.rule == ScheduleRule::kThm2 || s.rule == ScheduleRule::kThm3 ? 0.99 : 1.0);

  const bool needs_constants = s.rule != ScheduleRule::kFixed && !s.use_smoothness_heuristic;
  if (needs_constants) {
    if (cfg.problem.kind != "regression")
      throw std::invalid_argument(
          "exact constants are only available for regression; set schedule.l_source = heuristic");
    PLConstants c = pl_smooth_constants(data);
    s.mu = c.mu;
    s.L = s.rule == ScheduleRule::kThm3 ? mse_sample_smoothness_sup(data) : c.L;
  }
  return s;
}

namespace {

std::string trace_run_id(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.seeds.size() == 1) return cfg.name;
  return cfg.name + "-s" + std::to_string(seed);
}

void append_stochastic_mean_check(const ExperimentConfig& cfg, ExperimentResult& res) {
  if (res.traces.empty()) return;
  std::size_t len = res.traces.front().records.size();
  for (const Trace& t : res.traces) len = std::min(len, t.records.size());
  CheckRow row;
  row.run_id = cfg.name;
  row.check = "stochastic_mean_monotone";
  row.bound = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < len; ++i) {
    double cur = 0.0, next = 0.0;
    for (const Trace& t : res.traces) {
      cur += t.records[i].loss;
      next += t.records[i + 1].loss;
    }
    worst = std::max(worst, next - cur);
  }
  row.value = worst / static_cast<double>(res.traces.size());
  row.ok = row.value <= 0.0;
  row.note = "seed-mean loss increments over " + std::to_string(len) + " records";
  res.checks.push_back(std::move(row));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  Dataset data = build_dataset(cfg.problem);
  auto problem = build_problem(cfg.problem, data);
  const Schedule schedule = build_schedule(cfg, data, *problem);
  const Vec w0 = build_initial_point(cfg.init, cfg, data, *problem);
  const bool regression = cfg.problem.kind == "regression";
  const bool stochastic = cfg.mode == "stochastic";

  std::optional<PLConstants> constants;
  if (regression) {
    constants = pl_smooth_constants(data);
    res.L = constants->L;
    res.mu = constants->mu;
  }
  std::optional<double> f_star;
  if (regression) {
    if (data.noiseless) {
      f_star = 0.0;
    } else {
      Vec w_ls = least_squares(data.x, data.y);
      Vec r = sub(matvec(data.x, w_ls), data.y);
      f_star = 0.5 * dot(r, r);
    }
  }

  // Each seed owns a fresh mirror: the accumulator state is part of the run.
  for (std::uint64_t seed : cfg.seeds) {
    auto mirror = build_mirror(cfg.mirror, problem->dim());
    RunOptions opt;
    opt.steps = cfg.steps;
    opt.mode = stochastic ? Mode::kStochastic : Mode::kFull;
    opt.seed = seed;
    opt.keep_iterates = cfg.verify.any();
    opt.label = trace_run_id(cfg, seed);
    const double f0 = problem->value(w0);
    opt.stop_loss = cfg.stop_loss_rel > 0.0 ? cfg.stop_loss_rel * f0 : 0.0;

    try {
      Trace trace = run(*problem, *mirror, schedule, w0, opt);

      if (cfg.verify.contraction && !stochastic && constants.has_value()) {
        const bool taylor =
            schedule.rule == ScheduleRule::kThm2 || schedule.rule == ScheduleRule::kThm3;
        const auto rows =
            taylor ? per_step_contraction_taylor(trace, constants->mu, constants->L,
                                                 f_star.value_or(0.0), 1e-10 * f0)
                   : per_step_contraction(trace, constants->mu, constants->L,
                                          f_star.value_or(0.0), 1e-10 * f0);
        CheckRow row;
        row.run_id = trace.label;
        row.check = "per_step_contraction";
        row.ok = true;
        for (const auto& r : rows) {
          if (!r.ok) {
            row.ok = false;
            row.value = r.ratio;
            row.bound = r.bound;
            row.note = "violated at t = " + std::to_string(r.t);
            break;
          }
        }
        if (row.ok) row.note = std::to_string(rows.size()) + " steps checked";
        res.checks.push_back(std::move(row));
      } else if (cfg.verify.contraction && !constants.has_value()) {
        res.checks.push_back({trace.label, "per_step_contraction", 0.0, 0.0, true, false,
                              "skipped: no certified constants for this loss"});
      }

      if (cfg.verify.containment) {
        if (constants.has_value()) {
          const double R = dual_ball_radius_from_trace(trace, constants->L, constants->mu);
          RadiusReport rep = containment_check(trace, *mirror, R);
          res.checks.push_back({trace.label, "containment", rep.max_dual_displacement,
                                rep.R + rep.delta, rep.contained, true,
                                "delta = " + std::to_string(rep.delta)});
        } else {
          res.checks.push_back({trace.label, "containment", 0.0, 0.0, true, false,
                                "skipped: ball radius needs certified constants"});
        }
      }

      if (cfg.verify.implicit_reg) {
        const bool converged = trace.final_loss() <= 1e-10 * trace.initial_loss();
        if (regression && data.noiseless && converged && constants.has_value()) {
          const double R = dual_ball_radius_from_trace(trace, constants->L, constants->mu);
          ImplicitRegReport rep = implicit_reg_check(trace, *mirror, data, R);
          res.checks.push_back({trace.label, "implicit_reg_dual_2R", rep.dual_distance_to_wstar,
                                rep.bound_2r + 1e-6 * R,
                                rep.dual_distance_to_wstar <= rep.bound_2r + 1e-6 * R, true, ""});
          if (rep.bregman_w_inf_w0.has_value()) {
            res.checks.push_back({trace.label, "bregman_winf_w0", *rep.bregman_w_inf_w0,
                                  *rep.bregman_bound, *rep.bregman_w_inf_w0 <= *rep.bregman_bound,
                                  true, ""});
            res.checks.push_back({trace.label, "bregman_wstar_winf", *rep.bregman_wstar_winf,
                                  *rep.bregman_wstar_bound,
                                  *rep.bregman_wstar_winf <= *rep.bregman_wstar_bound, true, ""});
          }
        } else {
          res.checks.push_back({trace.label, "implicit_reg_dual_2R", 0.0, 0.0, true, false,
                                "skipped: needs a converged noiseless regression run"});
        }
      }

      if (cfg.verify.pl_check) {
        if (constants.has_value() && f_star.has_value()) {
          CheckRow row;
          row.run_id = trace.label;
          row.check = "pl_along_trace";
          row.ok = true;
          for (const TraceRecord& r : trace.records) {
            const double lhs = 0.5 * r.grad_norm * r.grad_norm;
            const double rhs = constants->mu * (r.loss - *f_star);
            if (lhs < rhs - 1e-8 * (1.0 + std::abs(rhs))) {
              row.ok = false;
              row.value = lhs;
              row.bound = rhs;
              row.note = "violated at t = " + std::to_string(r.t);
              break;
            }
          }
          if (row.ok) row.note = std::to_string(trace.records.size()) + " records checked";
          res.checks.push_back(std::move(row));
        } else {
          res.checks.push_back({trace.label, "pl_along_trace", 0.0, 0.0, true, false,
                                "report-only: optimum value unknown for this loss"});
        }
      }

      res.traces.push_back(std::move(trace));
    } catch (const DivergenceError& e) {
      res.errors.push_back(trace_run_id(cfg, seed) + ": " + e.what());
    }
  }

  if (cfg.verify.contraction && stochastic) append_stochastic_mean_check(cfg, res);

  res.all_ok = res.errors.empty();
  for (const CheckRow& c : res.checks)
    if (c.asserted && !c.ok) res.all_ok = false;
  return res;
}

// --- persistence -------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("float formatting failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("bad float in CSV: " + s);
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

constexpr const char* kCsvHeader =
    "run_id,seed,t,loss,grad_norm,sample_grad_norm,eta,sample_index,dual_displacement,alpha_l,"
    "alpha_u";

}  // namespace

std::string traces_to_csv(const std::vector<Trace>& traces) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const Trace& trace : traces) {
    for (const TraceRecord& r : trace.records) {
      out << trace.label << ',' << trace.seed << ',' << r.t << ',' << format_double(r.loss) << ','
          << format_double(r.grad_norm) << ',';
      if (r.sample_grad_norm) out << format_double(*r.sample_grad_norm);
      out << ',';
      if (r.eta) out << format_double(*r.eta);
      out << ',';
      if (r.sample_index) out << *r.sample_index;
      out << ',';
      if (r.dual_displacement) out << format_double(*r.dual_displacement);
      out << ',' << format_double(r.alpha_l) << ',' << format_double(r.alpha_u) << "\n";
    }
  }
  return out.str();
}

std::vector<Trace> parse_traces_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("CSV: unexpected header: " + line);

  std::vector<Trace> traces;
  std::string cur_key;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11) throw std::runtime_error("CSV: bad field count: " + line);
    const std::string key = f[0] + "\x1f" + f[1];
    if (traces.empty() || key != cur_key) {
      Trace t;
      t.label = f[0];
      t.seed = static_cast<std::uint64_t>(std::stoull(f[1]));
      traces.push_back(std::move(t));
      cur_key = key;
    }
    TraceRecord r;
    r.t = static_cast<int>(std::stol(f[2]));
    r.loss = parse_double(f[3]);
    r.grad_norm = parse_double(f[4]);
    if (!f[5].empty()) r.sample_grad_norm = parse_double(f[5]);
    if (!f[6].empty()) r.eta = parse_double(f[6]);
    if (!f[7].empty()) r.sample_index = std::stoll(f[7]);
    if (!f[8].empty()) r.dual_displacement = parse_double(f[8]);
    r.alpha_l = parse_double(f[9]);
    r.alpha_u = parse_double(f[10]);
    Trace& t = traces.back();
    if (r.sample_index.has_value()) t.mode = Mode::kStochastic;
    t.records.push_back(std::move(r));
  }
  return traces;
}

std::string checks_to_csv(const std::vector<CheckRow>& checks) {
  std::ostringstream out;
  out << "run_id,check,value,bound,ok,asserted,note\n";
  for (const CheckRow& c : checks) {
    std::string note = c.note;
    std::replace(note.begin(), note.end(), ',', ';');
    out << c.run_id << ',' << c.check << ',' << format_double(c.value) << ','
        << format_double(c.bound) << ',' << (c.ok ? "true" : "false") << ','
        << (c.asserted ? "true" : "false") << ',' << note << "\n";
  }
  return out.str();
}

std::string checks_to_text(const std::vector<CheckRow>& checks) {
  std::ostringstream out;
  for (const CheckRow& c : checks) {
    out << (c.ok ? "[ok]  " : "[FAIL] ") << c.run_id << " " << c.check
        << " value=" << format_double(c.value) << " bound=" << format_double(c.bound);
    if (!c.asserted) out << " (report-only)";
    if (!c.note.empty()) out << "  # " << c.note;
    out << "\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string output_dir() {
  const char* env = std::getenv("GMD_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

ExperimentResult run_and_persist(const ExperimentConfig& cfg, const std::string& dir) {
  ExperimentResult res = run_experiment(cfg);
  const std::string base = dir + "/" + cfg.name;
  write_file(base + ".csv", traces_to_csv(res.traces));
  write_file(base + "_checks.csv", checks_to_csv(res.checks));
  std::ostringstream report;
  report << "experiment " << cfg.name << "\n";
  if (res.L > 0.0)
    report << "L = " << format_double(res.L) << "  mu = " << format_double(res.mu)
           << "  kappa = " << format_double(res.L / res.mu) << "\n";
  for (const std::string& e : res.errors) report << "aborted: " << e << "\n";
  report << checks_to_text(res.checks);
  report << (res.all_ok ? "all checks passed\n" : "CHECKS FAILED\n");
  write_file(base + "_report.txt", report.str());
  if (!res.traces.empty()) write_file(base + ".svg", emit_svg(res.traces, PlotStyle::kLogLoss));
  return res;
}

}  // namespace gmd
