#include "gmd/mirrors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gmd/rng.hpp"

namespace gmd {

double MirrorMap::potential(const Vec&) const {
  throw std::logic_error("mirror map exposes no potential");
}

double IdentityMirror::potential(const Vec& w) const { return 0.5 * dot(w, w); }

namespace {

// lower-triangular Cholesky (throws if not PD)
Mat chol_factor(const Mat& a) {
  Mat f = a;
  const std::size_t n = f.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = f(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= f(j, k) * f(j, k);
    if (!(d > 0.0)) throw std::invalid_argument("linear_mirror: matrix not positive definite");
    const double l = std::sqrt(d);
    f(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = f(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= f(i, k) * f(j, k);
      f(i, j) = s / l;
    }
  }
  return f;
}

Vec chol_solve(const Mat& l, const Vec& b) {
  const std::size_t n = l.rows();
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

bool is_diagonal(const Mat& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

LinearMirror::LinearMirror(Mat g) : g_(std::move(g)) {
  if (g_.rows() != g_.cols()) throw std::invalid_argument("linear_mirror: matrix not square");
  for (std::size_t i = 0; i < g_.rows(); ++i)
    for (std::size_t j = i + 1; j < g_.cols(); ++j)
      if (std::abs(g_(i, j) - g_(j, i)) > 1e-12 * (1.0 + std::abs(g_(i, j))))
        throw std::invalid_argument("linear_mirror: matrix not symmetric");
  chol_ = chol_factor(g_);
  if (is_diagonal(g_)) {
    double lo = g_(0, 0), hi = g_(0, 0);
    for (std::size_t i = 1; i < g_.rows(); ++i) {
      lo = std::min(lo, g_(i, i));
      hi = std::max(hi, g_(i, i));
    }
    bounds_ = {lo, hi};
  } else {
    EigenExtremes e = extreme_eigenvalues(g_);
    bounds_ = {e.lambda_min_nonzero, e.lambda_max};
  }
}

Vec LinearMirror::forward(int, const Vec& w) const { return matvec(g_, w); }

Vec LinearMirror::inverse(int, const Vec& z) const { return chol_solve(chol_, z); }

Vec LinearMirror::jacobian_apply(int, const Vec&, const Vec& v) const { return matvec(g_, v); }

double LinearMirror::potential(const Vec& w) const { return 0.5 * dot(w, matvec(g_, w)); }

TanhMirror::TanhMirror(double beta) : beta_(beta) {
  if (!(beta >= 0.0) || !(beta < 1.0))
    throw std::invalid_argument("tanh_mirror: beta must lie in [0, 1)");
}

namespace {

inline double sech2(double x) {
  const double c = std::cosh(x);
  return std::isinf(c) ? 0.0 : 1.0 / (c * c);
}

inline double log_cosh(double x) {
  const double a = std::abs(x);
  // log cosh x = |x| - log 2 + log1p(exp(-2|x|)), overflow-safe
  return a - M_LN2 + std::log1p(std::exp(-2.0 * a));
}

// Solve x + beta tanh(x) = z: Newton from x = z with bisection safeguard on
// [z - beta, z + beta] (valid since |phi(x) - x| <= beta).
double tanh_inverse_scalar(double beta, double z) {
  if (beta == 0.0) return z;
  double lo = z - beta, hi = z + beta;
  double x = z;
  const double tol = 1e-14 * std::max(1.0, std::abs(z));
  for (int it = 0; it < 80; ++it) {
    const double f = x + beta * std::tanh(x) - z;
    if (std::abs(f) <= tol) return x;
    if (f > 0.0) hi = x; else lo = x;
    const double deriv = 1.0 + beta * sech2(x);
    double next = x - f / deriv;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);  // fall back to bisection
    if (next == x) return x;
    x = next;
  }
  if (std::abs(x + beta * std::tanh(x) - z) > 1e-9 * std::max(1.0, std::abs(z)))
    throw std::runtime_error("tanh_mirror: inversion failed to converge at z = " +
                             std::to_string(z));
  return x;
}

}  // namespace

Vec TanhMirror::forward(int, const Vec& w) const {
  Vec z(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) z[i] = w[i] + beta_ * std::tanh(w[i]);
  return z;
}

Vec TanhMirror::inverse(int, const Vec& z) const {
  Vec w(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) w[i] = tanh_inverse_scalar(beta_, z[i]);
  return w;
}

Vec TanhMirror::jacobian_apply(int, const Vec& w, const Vec& v) const {
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = (1.0 + beta_ * sech2(w[i])) * v[i];
  return r;
}

double TanhMirror::potential(const Vec& w) const {
  double p = 0.0;
  for (double x : w) p += 0.5 * x * x + beta_ * log_cosh(x);
  return p;
}

AdagradState adagrad_accumulate(AdagradState state, const Vec& grad) {
  if (state.accum.size() != grad.size())
    throw std::invalid_argument("adagrad_accumulate: size mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) state.accum[i] += grad[i] * grad[i];
  return state;
}

MirrorBounds adagrad_bounds(const AdagradState& state) {
  double lo = state.accum[0], hi = state.accum[0];
  for (double v : state.accum) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {std::sqrt(lo + state.epsilon), std::sqrt(hi + state.epsilon)};
}

AdagradMirror::AdagradMirror(std::size_t dim, double epsilon) {
  if (dim == 0) throw std::invalid_argument("adagrad_mirror: dimension must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("adagrad_mirror: epsilon must be >= 0");
  state_.accum.assign(dim, 0.0);
  state_.epsilon = epsilon;
}

const Vec& AdagradMirror::accum_at(int t) const {
  if (t < 0 || history_.empty() || t >= static_cast<int>(history_.size())) return state_.accum;
  return history_[static_cast<std::size_t>(t)];
}

Vec AdagradMirror::forward(int t, const Vec& w) const {
  const Vec& a = accum_at(t);
  if (w.size() != a.size()) throw std::invalid_argument("adagrad forward: size mismatch");
  Vec z(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) z[i] = std::sqrt(a[i] + state_.epsilon) * w[i];
  return z;
}

Vec AdagradMirror::inverse(int t, const Vec& z) const {
  const Vec& a = accum_at(t);
  if (z.size() != a.size()) throw std::invalid_argument("adagrad inverse: size mismatch");
  Vec w(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) w[i] = z[i] / std::sqrt(a[i] + state_.epsilon);
  return w;
}

MirrorBounds AdagradMirror::bounds(int t) const {
  AdagradState s{accum_at(t), state_.epsilon};
  return adagrad_bounds(s);
}

Vec AdagradMirror::jacobian_apply(int t, const Vec&, const Vec& v) const {
  const Vec& a = accum_at(t);
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = std::sqrt(a[i] + state_.epsilon) * v[i];
  return r;
}

void AdagradMirror::accumulate(const Vec& grad) {
  state_ = adagrad_accumulate(std::move(state_), grad);
  if (track_history_) history_.push_back(state_.accum);
}

std::unique_ptr<MirrorMap> identity_mirror() { return std::make_unique<IdentityMirror>(); }
std::unique_ptr<MirrorMap> linear_mirror(Mat g) {
  return std::make_unique<LinearMirror>(std::move(g));
}
std::unique_ptr<MirrorMap> tanh_mirror(double beta) { return std::make_unique<TanhMirror>(beta); }
std::unique_ptr<AdagradMirror> adagrad_mirror(std::size_t dim, double epsilon) {
  return std::make_unique<AdagradMirror>(dim, epsilon);
}

double bregman(const MirrorMap& map, const Vec& x, const Vec& y) {
  if (!map.has_potential())
    throw std::logic_error("bregman: mirror map has no potential");
  const Vec gy = map.forward(0, y);  // grad psi = phi for potential mirrors
  const double d = map.potential(x) - map.potential(y) - dot(gy, sub(x, y));
  if (d < -1e-12 * std::max(1.0, std::abs(map.potential(x))))
    throw std::runtime_error("bregman: negative divergence, potential not convex?");
  return d;
}

MirrorBoundsReport verify_mirror_bounds(const MirrorMap& map, int t, int samples, double box,
                                        std::size_t dim, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("verify_mirror_bounds: samples must be >= 1");
  Rng rng(seed ^ 0xb0c4d5e6f708192ull);
  const MirrorBounds b = map.bounds(t);
  MirrorBoundsReport rep;
  rep.worst_lower_ratio = std::numeric_limits<double>::infinity();
  rep.worst_upper_ratio = 0.0;
  rep.ok = true;
  for (int s = 0; s < samples; ++s) {
    Vec x(dim), y(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = rng.uniform(-box, box);
    for (std::size_t i = 0; i < dim; ++i) y[i] = rng.uniform(-box, box);
    const Vec dx = sub(x, y);
    const double n2 = dot(dx, dx);
    if (n2 <= 1e-30) continue;
    const Vec dphi = sub(map.forward(t, x), map.forward(t, y));
    const double lower = dot(dphi, dx) / n2;
    const double upper = norm(dphi) / std::sqrt(n2);
    rep.worst_lower_ratio = std::min(rep.worst_lower_ratio, lower);
    rep.worst_upper_ratio = std::max(rep.worst_upper_ratio, upper);
    const bool pair_ok = lower >= b.alpha_l * (1.0 - 1e-9) - 1e-9 &&
                         upper <= b.alpha_u * (1.0 + 1e-9) + 1e-9;
    if (!pair_ok && rep.ok) {
      rep.ok = false;
      rep.witness_x = x;
      rep.witness_y = y;
    }
  }
  return rep;
}

}  // namespace gmd
