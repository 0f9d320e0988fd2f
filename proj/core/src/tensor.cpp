#include "gmd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gmd/rng.hpp"

namespace gmd {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("Mat: dimensions must be positive");
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = rows.begin()->size();
  Mat m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("Mat::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec scale(double s, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

void axpy(double s, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void require_finite(const Vec& v, const char* what) {
  if (!all_finite(v)) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

Vec matvec(const Mat& a, const Vec& x) {
  if (x.size() != a.cols()) throw std::invalid_argument("matvec: size mismatch");
  Vec r(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
    r[i] = s;
  }
  return r;
}

Vec matvec_t(const Mat& a, const Vec& x) {
  if (x.size() != a.rows()) throw std::invalid_argument("matvec_t: size mismatch");
  Vec r(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] += row[j] * xi;
  }
  return r;
}

Mat gram_rows(const Mat& a) {
  Mat g(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ri = a.row(i);
    for (std::size_t j = i; j < a.rows(); ++j) {
      const auto rj = a.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ri[k] * rj[k];
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

Mat gram_cols(const Mat& a) {
  Mat g(a.cols(), a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double v = row[j];
      if (v == 0.0) continue;
      for (std::size_t k = j; k < a.cols(); ++k) g(j, k) += v * row[k];
    }
  }
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t k = 0; k < j; ++k) g(j, k) = g(k, j);
  return g;
}

namespace {

double max_abs_entry(const Mat& m) {
  double mx = 0.0;
  for (double v : m.data()) mx = std::max(mx, std::abs(v));
  return mx;
}

void check_symmetric(const Mat& g) {
  if (g.rows() != g.cols()) throw std::invalid_argument("extreme_eigenvalues: matrix not square");
  const double scale = max_abs_entry(g);
  const double tol = 1e-8 * (1.0 + scale);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = i + 1; j < g.cols(); ++j)
      if (std::abs(g(i, j) - g(j, i)) > tol)
        throw std::invalid_argument("extreme_eigenvalues: matrix not symmetric");
}

// Rayleigh-quotient power iteration on `apply`. Runs until the quotient
// stagnates at machine level or max_iter is hit; returns the final quotient.
template <typename Apply>
double power_iterate(std::size_t n, Apply&& apply, std::uint64_t seed, long max_iter) {
  Rng rng(seed);
  Vec v(n);
  for (auto& x : v) x = rng.gaussian();
  double nv = norm(v);
  if (nv == 0.0) v[0] = 1.0, nv = 1.0;
  for (auto& x : v) x /= nv;

  double rq = 0.0;
  int stagnant = 0;
  for (long it = 0; it < max_iter; ++it) {
    Vec w = apply(v);
    const double rq_next = dot(v, w);
    const double nw = norm(w);
    if (nw <= 1e-300) return 0.0;  // operator annihilates the iterate
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 4 && std::abs(rq_next - rq) <= 1e-15 * std::max(1e-300, std::abs(rq_next))) {
      if (++stagnant >= 3) return rq_next;
    } else {
      stagnant = 0;
    }
    rq = rq_next;
  }
  return rq;
}

}  // namespace

EigenExtremes extreme_eigenvalues(const Mat& gram, double tol) {
  check_symmetric(gram);
  const std::size_t n = gram.rows();
  const long max_iter = 200000;

  auto apply_g = [&](const Vec& v) { return matvec(gram, v); };
  double lmax = power_iterate(n, apply_g, 0x8f1db4c2u, max_iter);
  lmax = std::max(lmax, power_iterate(n, apply_g, 0x2e05a1b7u, max_iter));
  if (!(lmax > 0.0) || max_abs_entry(gram) == 0.0)
    throw std::invalid_argument("extreme_eigenvalues: zero matrix has no nonzero eigenvalue");

  // Orthonormal basis of the numerical range via pivoted modified Gram-Schmidt
  // on the columns of G. Columns with residual below tol * lambda_max are null.
  const double drop = tol * lmax;
  std::vector<Vec> basis;
  std::vector<Vec> residual(n);
  for (std::size_t j = 0; j < n; ++j) {
    residual[j].resize(n);
    for (std::size_t i = 0; i < n; ++i) residual[j][i] = gram(i, j);
  }
  std::vector<bool> used(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pivot = n;
    double best = drop;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double r = norm(residual[j]);
      if (r > best) best = r, pivot = j;
    }
    if (pivot == n) break;
    used[pivot] = true;
    Vec q = scale(1.0 / best, residual[pivot]);
    // re-orthogonalize once for stability
    for (const Vec& b : basis) axpy(-dot(b, q), b, q);
    const double nq = norm(q);
    if (nq <= 0.5) continue;  // direction already spanned
    for (auto& x : q) x /= nq;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      axpy(-dot(q, residual[j]), q, residual[j]);
    }
    basis.push_back(std::move(q));
  }
  const std::size_t r = basis.size();

  // S = Q^T G Q restricted operator; power iteration on (lmax I - S).
  Mat s(r, r);
  std::vector<Vec> gq(r);
  for (std::size_t j = 0; j < r; ++j) gq[j] = matvec(gram, basis[j]);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) s(i, j) = dot(basis[i], gq[j]);

  auto apply_shifted = [&](const Vec& v) {
    Vec w = matvec(s, v);
    for (std::size_t i = 0; i < r; ++i) w[i] = lmax * v[i] - w[i];
    return w;
  };
  double top = power_iterate(r, apply_shifted, 0x51caf00du, max_iter);
  top = std::max(top, power_iterate(r, apply_shifted, 0x77e1d2a9u, max_iter));
  top = std::clamp(top, 0.0, lmax);

  EigenExtremes out;
  out.lambda_max = lmax;
  out.lambda_min_nonzero = lmax - top;
  out.rank_estimate = static_cast<int>(r);
  return out;
}

namespace {

// In-place lower Cholesky; returns false on a non-positive pivot.
bool cholesky(Mat& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / l;
    }
  }
  return true;
}

Vec cholesky_solve(const Mat& l, const Vec& b) {
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

double diag_max(const Mat& m) {
  double mx = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) mx = std::max(mx, m(i, i));
  return mx;
}

}  // namespace

Vec spd_solve(const Mat& s, const Vec& b, double ridge) {
  Mat f = s;
  if (!cholesky(f)) {
    f = s;
    for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) += ridge;
    if (!cholesky(f)) throw std::runtime_error("spd_solve: matrix not positive semidefinite");
  }
  return cholesky_solve(f, b);
}

namespace {

// Shared core of min_norm_interpolant / least_squares: the minimum-norm
// correction X^+ r routed through the smaller Gram.
Vec pinv_apply(const Mat& x, const Vec& r) {
  // max diagonal of a PSD Gram sits in [lambda_max / n, lambda_max]
  if (x.rows() <= x.cols()) {
    Mat g = gram_rows(x);
    Vec z = spd_solve(g, r, 1e-12 * std::max(diag_max(g), 1e-300));
    return matvec_t(x, z);
  }
  Mat g = gram_cols(x);
  Vec xtr = matvec_t(x, r);
  return spd_solve(g, xtr, 1e-12 * std::max(diag_max(g), 1e-300));
}

}  // namespace

Vec least_squares(const Mat& x, const Vec& y) {
  if (y.size() != x.rows()) throw std::invalid_argument("least_squares: size mismatch");
  return pinv_apply(x, y);
}

PinvOperator::PinvOperator(const Mat& x) : x_(x), row_side_(x.rows() <= x.cols()) {
  Mat g = row_side_ ? gram_rows(x) : gram_cols(x);
  const double ridge = 1e-12 * std::max(diag_max(g), 1e-300);
  factor_ = g;
  if (!cholesky(factor_)) {
    factor_ = g;
    for (std::size_t i = 0; i < factor_.rows(); ++i) factor_(i, i) += ridge;
    if (!cholesky(factor_)) throw std::runtime_error("PinvOperator: Gram factorization failed");
  }
}

Vec PinvOperator::apply(const Vec& r) const {
  if (r.size() != x_.rows()) throw std::invalid_argument("PinvOperator: size mismatch");
  if (row_side_) return matvec_t(x_, cholesky_solve(factor_, r));
  return cholesky_solve(factor_, matvec_t(x_, r));
}

Vec min_norm_interpolant(const Mat& x, const Vec& y, const Vec& w0) {
  if (y.size() != x.rows() || w0.size() != x.cols())
    throw std::invalid_argument("min_norm_interpolant: size mismatch");
  Vec r = sub(y, matvec(x, w0));
  Vec w = add(w0, pinv_apply(x, r));
  const double resid = norm(sub(matvec(x, w), y));
  if (resid > 1e-8 * (1.0 + norm(y)))
    throw std::runtime_error("min_norm_interpolant: system X w = y is inconsistent (residual " +
                             std::to_string(resid) + ")");
  require_finite(w, "min_norm_interpolant");
  return w;
}

}  // namespace gmd
