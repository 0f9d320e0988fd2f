#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gmd {

using Vec = std::vector<double>;

// Dense row-major matrix. Desk-scale only: no views, no sparsity.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_.data() + i * cols_, cols_);
  }
  std::span<double> row(std::size_t i) {
    return std::span<double>(data_.data() + i * cols_, cols_);
  }

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// --- vector helpers ---------------------------------------------------------

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(double s, const Vec& a);
// y += s * x
void axpy(double s, const Vec& x, Vec& y);

bool all_finite(const Vec& v);
// Throws std::runtime_error naming `what` if v holds a NaN or infinity.
void require_finite(const Vec& v, const char* what);

// --- matrix products --------------------------------------------------------

Vec matvec(const Mat& a, const Vec& x);    // A x
Vec matvec_t(const Mat& a, const Vec& x);  // A^T x
Mat gram_rows(const Mat& a);               // A A^T  (rows x rows)
Mat gram_cols(const Mat& a);               // A^T A  (cols x cols)

// --- spectral extremes ------------------------------------------------------

struct EigenExtremes {
  double lambda_max = 0.0;
  double lambda_min_nonzero = 0.0;  // smallest eigenvalue above tol * lambda_max
  int rank_estimate = 0;
};

// Extreme eigenvalues of a symmetric PSD Gram matrix via power iteration:
// lambda_max on G directly, lambda_min_nonzero by shifted power iteration on
// (lambda_max I - S) where S is G restricted to its numerical range (pivoted
// Gram-Schmidt basis, columns below tol * lambda_max treated as null space).
// Rejects non-symmetric input; throws if the matrix is (numerically) zero.
EigenExtremes extreme_eigenvalues(const Mat& gram, double tol = 1e-10);

// --- interpolation ----------------------------------------------------------

// Minimum-norm solution of X w = y closest to w0:
//   w0 + X^T (X X^T)^+ (y - X w0)
// computed through the smaller of the two Gram matrices; the pseudoinverse is
// applied as a Cholesky solve, with ridge 1e-12 * lambda_max retried when the
// Gram is singular. Throws if the system is inconsistent (residual above
// 1e-8 * (1 + |y|)).
Vec min_norm_interpolant(const Mat& x, const Vec& y, const Vec& w0);

// Least-squares solve (no consistency requirement); returns the minimizer of
// |X w - y| with minimum norm among minimizers.
Vec least_squares(const Mat& x, const Vec& y);

// Solve (S + ridge I) u = b for symmetric positive (semi)definite S.
// Plain Cholesky first; on breakdown retries with the caller's ridge.
Vec spd_solve(const Mat& s, const Vec& b, double ridge);

// X^+ applied through a Gram factorization computed once at construction;
// cheap to apply repeatedly (projected solves, affine projections).
class PinvOperator {
 public:
  explicit PinvOperator(const Mat& x);
  // X^+ r  (minimum-norm least-squares solution of X u = r)
  Vec apply(const Vec& r) const;

 private:
  const Mat& x_;
  Mat factor_;      // Cholesky factor of the smaller Gram (+ ridge when singular)
  bool row_side_;   // true: factored X X^T, false: factored X^T X
};

}  // namespace gmd
