#pragma once

#include <optional>
#include <vector>

#include "gmd/mirrors.hpp"
#include "gmd/optimizer.hpp"
#include "gmd/problems.hpp"
#include "gmd/tensor.hpp"

namespace gmd {

// Dual-space trajectory ball radius 2 sqrt(2 L) sqrt(f0) alpha_u^2 / (alpha_l mu).
double dual_ball_radius(double L, double f0, double alpha_l, double alpha_u, double mu);

struct RadiusReport {
  double R = 0.0;
  double delta = 0.0;  // accumulated mirror drift; 0 for time-independent maps
  double max_dual_displacement = 0.0;
  bool contained = false;  // max displacement <= R + delta + 1e-9 R
};

// Checks every recorded dual displacement against the ball of radius R (+ the
// drift term for the accumulator mirror, which requires a trace with iterates
// and a history-tracking mirror).
RadiusReport containment_check(const Trace& trace, const MirrorMap& mirror, double R);

struct ImplicitRegReport {
  double dual_distance_to_wstar = 0.0;  // |phi(w*) - phi(w_inf)|
  double bound_2r = 0.0;
  std::optional<double> bregman_w_inf_w0;     // D_psi(w_inf, w0)
  std::optional<double> bregman_bound;        // R^2 / (2 alpha_l)
  std::optional<double> bregman_wstar_winf;   // D_psi(w*, w_inf)
  std::optional<double> bregman_wstar_bound;  // alpha_u R^2/alpha_l^3 + R^2/alpha_l
  Vec w_star;
};

// Interpolating solution closest to w0 in the dual norm |phi(w) - phi(w0)|:
// the exact minimum-norm interpolant for the identity map, projected gradient
// descent on the affine solution set otherwise (initialized at the
// minimum-norm interpolant, run to projected-gradient tolerance 1e-10).
Vec phi_space_interpolant(const MirrorMap& mirror, int t, const Mat& x, const Vec& y,
                          const Vec& w0);

// Distance-to-closest-interpolant checks for a converged noiseless run.
// Bregman fields are filled only when the mirror exposes a potential.
ImplicitRegReport implicit_reg_check(const Trace& trace, const MirrorMap& mirror,
                                     const Dataset& data, double R);

struct RateEstimate {
  double slope = 0.0;            // least-squares slope of ln(loss) vs t
  double predicted_slope = 0.0;  // ln(1 - 1/kappa); -inf when kappa <= 1
  double r_squared = 0.0;
};

// Fits the converging segment (records with loss > 1e-13 * initial loss);
// requires at least 10 such records.
RateEstimate estimate_rate(const Trace& trace, double kappa);

struct ContractionRow {
  int t = 0;
  double ratio = 0.0;
  double bound = 0.0;
  bool ok = false;
};

// Per-step contraction check with bound 1 - 2 mu eta al/au^2 + mu L eta^2/au^2
// evaluated from each record's recorded eta and mirror bounds. Steps at the
// optimum (f = f*) are skipped; ok <=> f_next - f* <= bound (f - f*)
// + 1e-9 (f - f*) + abs_slack.
std::vector<ContractionRow> per_step_contraction(const Trace& trace, double mu, double L,
                                                 double f_star = 0.0, double abs_slack = 0.0);

// Same check against the Taylor-rate coefficient
// 1 - mu eta/au + mu L eta^2/al^2 + mu L eta^2/(4 au^2).
std::vector<ContractionRow> per_step_contraction_taylor(const Trace& trace, double mu, double L,
                                                        double f_star = 0.0,
                                                        double abs_slack = 0.0);

// R evaluated from the extreme mirror bounds realized along a trace
// (sup alpha_u, inf alpha_l over records), suitable for step-dependent maps.
double dual_ball_radius_from_trace(const Trace& trace, double L, double mu);

}  // namespace gmd
