#include "gmd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gmd {

double dual_ball_radius(double L, double f0, double alpha_l, double alpha_u, double mu) {
  if (!(L > 0.0) || !(alpha_l > 0.0) || !(alpha_u > 0.0) || !(mu > 0.0) || f0 < 0.0)
    throw std::invalid_argument("dual_ball_radius: invalid constants");
  return 2.0 * std::sqrt(2.0 * L) * std::sqrt(f0) * alpha_u * alpha_u / (alpha_l * mu);
}

double dual_ball_radius_from_trace(const Trace& trace, double L, double mu) {
  double al = std::numeric_limits<double>::infinity();
  double au = 0.0;
  for (const TraceRecord& r : trace.records) {
    al = std::min(al, r.alpha_l);
    au = std::max(au, r.alpha_u);
  }
  return dual_ball_radius(L, trace.initial_loss(), al, au, mu);
}

RadiusReport containment_check(const Trace& trace, const MirrorMap& mirror, double R) {
  if (trace.records.empty()) throw std::invalid_argument("containment_check: empty trace");
  RadiusReport rep;
  rep.R = R;
  for (const TraceRecord& r : trace.records)
    if (r.dual_displacement.has_value())
      rep.max_dual_displacement = std::max(rep.max_dual_displacement, *r.dual_displacement);

  if (mirror.kind() == MirrorKind::kAdagrad) {
    // drift sum_{i>=1} |phi^i(w^i) - phi^{i-1}(w^i)| needs the stored iterates
    if (trace.iterates.empty())
      throw std::invalid_argument(
          "containment_check: accumulator mirror needs a trace recorded with keep_iterates");
    const int steps = static_cast<int>(trace.iterates.size()) - 1;
    for (int i = 1; i < steps; ++i) {
      const Vec& wi = trace.iterates[static_cast<std::size_t>(i)];
      rep.delta += norm(sub(mirror.forward(i, wi), mirror.forward(i - 1, wi)));
    }
  }
  rep.contained = rep.max_dual_displacement <= rep.R + rep.delta + 1e-9 * rep.R;
  return rep;
}

namespace {

// Projection machinery for the affine set {w : X w = y}; the pseudoinverse
// factorization is shared across all applications.
struct AffineProjector {
  const Mat& x;
  const Vec& y;
  PinvOperator pinv;
  AffineProjector(const Mat& x_, const Vec& y_) : x(x_), y(y_), pinv(x_) {}
  Vec onto(const Vec& v) const { return sub(v, pinv.apply(sub(matvec(x, v), y))); }
  Vec tangent(const Vec& v) const { return sub(v, pinv.apply(matvec(x, v))); }
};

}  // namespace

Vec phi_space_interpolant(const MirrorMap& mirror, int t, const Mat& x, const Vec& y,
                          const Vec& w0) {
  Vec w = min_norm_interpolant(x, y, w0);
  if (mirror.kind() == MirrorKind::kIdentity) return w;

  const AffineProjector proj(x, y);
  const Vec z0 = mirror.forward(t, w0);
  const double au = mirror.bounds(t).alpha_u;
  double step = 1.0 / (au * au);
  auto objective = [&](const Vec& v) {
    Vec dz = sub(mirror.forward(t, v), z0);
    return 0.5 * dot(dz, dz);
  };
  double fw = objective(w);
  const int max_iter = 200000;
  for (int it = 0; it < max_iter; ++it) {
    Vec dz = sub(mirror.forward(t, w), z0);
    Vec g = mirror.jacobian_apply(t, w, dz);
    Vec gp = proj.tangent(g);
    const double gn = norm(gp);
    if (gn <= 1e-10) return w;
    // backtracking on the projected step
    for (int half = 0; half < 60; ++half) {
      Vec cand = proj.onto(sub(w, scale(step, gp)));
      const double fc = objective(cand);
      if (fc < fw) {
        w = std::move(cand);
        fw = fc;
        step *= 1.25;
        break;
      }
      step *= 0.5;
      if (half == 59)
        throw std::runtime_error("phi_space_interpolant: line search failed to descend");
    }
  }
  throw std::runtime_error("phi_space_interpolant: projected gradient did not converge");
}

ImplicitRegReport implicit_reg_check(const Trace& trace, const MirrorMap& mirror,
                                     const Dataset& data, double R) {
  if (!data.noiseless) throw std::invalid_argument("implicit_reg_check: dataset must be noiseless");
  if (!(trace.final_loss() <= 1e-10 * trace.initial_loss()))
    throw std::invalid_argument("implicit_reg_check: trace has not converged");

  const int t_final = static_cast<int>(trace.records.size()) - 2;  // last step's mirror index
  const int t = std::max(t_final, 0);
  ImplicitRegReport rep;
  rep.bound_2r = 2.0 * R;
  rep.w_star = phi_space_interpolant(mirror, t, data.x, data.y, trace.initial_w);
  rep.dual_distance_to_wstar =
      norm(sub(mirror.forward(t, rep.w_star), mirror.forward(t, trace.final_w)));

  if (mirror.has_potential()) {
    const MirrorBounds b = mirror.bounds(t);
    rep.bregman_w_inf_w0 = bregman(mirror, trace.final_w, trace.initial_w);
    rep.bregman_bound = R * R / (2.0 * b.alpha_l);
    rep.bregman_wstar_winf = bregman(mirror, rep.w_star, trace.final_w);
    rep.bregman_wstar_bound =
        b.alpha_u * R * R / (b.alpha_l * b.alpha_l * b.alpha_l) + R * R / b.alpha_l;
  }
  return rep;
}

RateEstimate estimate_rate(const Trace& trace, double kappa) {
  const double f0 = trace.initial_loss();
  std::vector<double> ts, ys;
  for (const TraceRecord& r : trace.records) {
    if (r.loss > 1e-13 * f0 && r.loss > 0.0) {
      ts.push_back(static_cast<double>(r.t));
      ys.push_back(std::log(r.loss));
    }
  }
  if (ts.size() < 10)
    throw std::invalid_argument("estimate_rate: fewer than 10 records above the loss floor");

  const double n = static_cast<double>(ts.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) st += ts[i], sy += ys[i];
  const double mt = st / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxx += (ts[i] - mt) * (ts[i] - mt);
    sxy += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateEstimate est;
  est.slope = sxy / sxx;
  est.predicted_slope = kappa > 1.0 ? std::log1p(-1.0 / kappa)
                                    : -std::numeric_limits<double>::infinity();
  est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return est;
}

namespace {

std::vector<ContractionRow> contraction_rows(const Trace& trace, double f_star, double abs_slack,
                                             auto&& bound_fn) {
  std::vector<ContractionRow> rows;
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const TraceRecord& cur = trace.records[i];
    const TraceRecord& next = trace.records[i + 1];
    if (!cur.eta.has_value()) continue;
    const double gap = cur.loss - f_star;
    if (!(gap > 0.0)) continue;  // at the optimum, nothing to contract
    ContractionRow row;
    row.t = cur.t;
    row.bound = bound_fn(cur);
    const double next_gap = next.loss - f_star;
    row.ratio = next_gap / gap;
    row.ok = next_gap <= row.bound * gap + 1e-9 * gap + abs_slack;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<ContractionRow> per_step_contraction(const Trace& trace, double mu, double L,
                                                 double f_star, double abs_slack) {
  return contraction_rows(trace, f_star, abs_slack, [&](const TraceRecord& r) {
    const double eta = *r.eta;
    const double au2 = r.alpha_u * r.alpha_u;
    return 1.0 - 2.0 * mu * eta * r.alpha_l / au2 + mu * L * eta * eta / au2;
  });
}

std::vector<ContractionRow> per_step_contraction_taylor(const Trace& trace, double mu, double L,
                                                        double f_star, double abs_slack) {
  return contraction_rows(trace, f_star, abs_slack, [&](const TraceRecord& r) {
    const double eta = *r.eta;
    const double al2 = r.alpha_l * r.alpha_l;
    const double au2 = r.alpha_u * r.alpha_u;
    return 1.0 - mu * eta / r.alpha_u + mu * L * eta * eta / al2 +
           mu * L * eta * eta / (4.0 * au2);
  });
}

}  // namespace gmd
