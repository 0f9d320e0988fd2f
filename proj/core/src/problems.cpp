#include "gmd/problems.hpp"

#include <cmath>
#include <stdexcept>

#include "gmd/rng.hpp"

namespace gmd {

void validate_dataset(const Dataset& data) {
  if (data.x.rows() == 0 || data.x.cols() == 0)
    throw std::invalid_argument("dataset: empty design matrix");
  if (data.y.size() != data.x.rows()) throw std::invalid_argument("dataset: target size mismatch");
  for (double v : data.x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite design entry");
  require_finite(data.y, "dataset targets");
  if (data.noiseless) {
    // existence of an interpolant; min_norm_interpolant throws when inconsistent
    (void)min_norm_interpolant(data.x, data.y, Vec(data.x.cols(), 0.0));
  }
}

PLConstants::PLConstants(double L_, double mu_) : L(L_), mu(mu_) {
  if (!(L > 0.0) || !(mu > 0.0)) throw std::invalid_argument("PLConstants: need L, mu > 0");
  if (mu > L * (1.0 + 1e-12))
    throw std::logic_error("PLConstants: mu exceeds L (gradient-dominance/smoothness order)");
}

MseProblem::MseProblem(Dataset data) : data_(std::move(data)) { validate_dataset(data_); }

double MseProblem::value(const Vec& w) const {
  Vec r = sub(matvec(data_.x, w), data_.y);
  return 0.5 * dot(r, r);
}

Vec MseProblem::grad(const Vec& w) const {
  Vec r = sub(matvec(data_.x, w), data_.y);
  Vec g = matvec_t(data_.x, r);
  require_finite(g, "mse gradient");
  return g;
}

double MseProblem::sample_value(std::size_t i, const Vec& w) const {
  if (i >= n_samples()) throw std::out_of_range("sample_value: index");
  const auto row = data_.x.row(i);
  double p = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) p += row[j] * w[j];
  const double r = p - data_.y[i];
  return 0.5 * static_cast<double>(n_samples()) * r * r;
}

Vec MseProblem::sample_grad(std::size_t i, const Vec& w) const {
  if (i >= n_samples()) throw std::out_of_range("sample_grad: index");
  const auto row = data_.x.row(i);
  double p = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) p += row[j] * w[j];
  const double c = static_cast<double>(n_samples()) * (p - data_.y[i]);
  Vec g(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) g[j] = c * row[j];
  return g;
}

Activation activation_from_string(const std::string& tag) {
  if (tag == "leaky-relu") return Activation::kLeakyRelu;
  if (tag == "x-plus-sin") return Activation::kXPlusSin;
  throw std::invalid_argument("unknown activation tag: " + tag);
}

std::string to_string(Activation a) {
  return a == Activation::kLeakyRelu ? "leaky-relu" : "x-plus-sin";
}

namespace {

constexpr double kLeakySlope = 0.01;

inline double act_eval(Activation a, double z) {
  if (a == Activation::kLeakyRelu) return z > 0.0 ? z : kLeakySlope * z;
  return z + std::sin(z);
}

// slope 1 exactly at the leaky kink
inline double act_deriv(Activation a, double z) {
  if (a == Activation::kLeakyRelu) return z >= 0.0 ? 1.0 : kLeakySlope;
  return 1.0 + std::cos(z);
}

}  // namespace

MlpProblem::MlpProblem(Dataset data, std::size_t hidden, Activation act, std::uint64_t init_seed)
    : data_(std::move(data)), act_(act) {
  if (hidden < 1) throw std::invalid_argument("mlp_problem: hidden must be >= 1");
  validate_dataset(data_);
  layout_ = MlpLayout{hidden, data_.x.cols()};
  init_.resize(layout_.size());
  Rng rng(init_seed);
  const double wb = 1.0 / std::sqrt(static_cast<double>(layout_.input_dim));
  for (std::size_t k = 0; k < hidden * layout_.input_dim; ++k) init_[k] = rng.uniform(-wb, wb);
  const double vb = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t k = 0; k < hidden; ++k) init_[layout_.v_index(k)] = rng.uniform(-vb, vb);
}

double MlpProblem::output(std::size_t i, const Vec& w) const {
  const auto xi = data_.x.row(i);
  double o = 0.0;
  for (std::size_t u = 0; u < layout_.hidden; ++u) {
    double z = 0.0;
    const std::size_t base = layout_.w_index(u, 0);
    for (std::size_t j = 0; j < layout_.input_dim; ++j) z += w[base + j] * xi[j];
    o += w[layout_.v_index(u)] * act_eval(act_, z);
  }
  return o;
}

double MlpProblem::value(const Vec& w) const {
  if (w.size() != layout_.size()) throw std::invalid_argument("mlp value: parameter size");
  double f = 0.0;
  for (std::size_t i = 0; i < n_samples(); ++i) {
    const double r = output(i, w) - data_.y[i];
    f += 0.5 * r * r;
  }
  return f;
}

double MlpProblem::sample_value(std::size_t i, const Vec& w) const {
  if (i >= n_samples()) throw std::out_of_range("sample_value: index");
  const double r = output(i, w) - data_.y[i];
  return 0.5 * static_cast<double>(n_samples()) * r * r;
}

Vec MlpProblem::sample_grad(std::size_t i, const Vec& w) const {
  if (i >= n_samples()) throw std::out_of_range("sample_grad: index");
  const auto xi = data_.x.row(i);
  Vec g(layout_.size(), 0.0);
  double o = 0.0;
  Vec z(layout_.hidden);
  for (std::size_t u = 0; u < layout_.hidden; ++u) {
    double s = 0.0;
    const std::size_t base = layout_.w_index(u, 0);
    for (std::size_t j = 0; j < layout_.input_dim; ++j) s += w[base + j] * xi[j];
    z[u] = s;
    o += w[layout_.v_index(u)] * act_eval(act_, s);
  }
  const double c = static_cast<double>(n_samples()) * (o - data_.y[i]);
  for (std::size_t u = 0; u < layout_.hidden; ++u) {
    g[layout_.v_index(u)] = c * act_eval(act_, z[u]);
    const double cw = c * w[layout_.v_index(u)] * act_deriv(act_, z[u]);
    const std::size_t base = layout_.w_index(u, 0);
    for (std::size_t j = 0; j < layout_.input_dim; ++j) g[base + j] = cw * xi[j];
  }
  return g;
}

Vec MlpProblem::grad(const Vec& w) const {
  if (w.size() != layout_.size()) throw std::invalid_argument("mlp grad: parameter size");
  Vec g(layout_.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n_samples());
  for (std::size_t i = 0; i < n_samples(); ++i) {
    Vec gi = sample_grad(i, w);
    axpy(inv_n, gi, g);
  }
  require_finite(g, "mlp gradient");
  return g;
}

std::unique_ptr<MseProblem> mse_problem(Dataset data) {
  return std::make_unique<MseProblem>(std::move(data));
}

std::unique_ptr<MlpProblem> mlp_problem(Dataset data, std::size_t hidden, Activation act,
                                        std::uint64_t init_seed) {
  return std::make_unique<MlpProblem>(std::move(data), hidden, act, init_seed);
}

PLConstants pl_smooth_constants(const Dataset& data) {
  const Mat& x = data.x;
  Mat gram = x.rows() <= x.cols() ? gram_rows(x) : gram_cols(x);
  EigenExtremes e = extreme_eigenvalues(gram);
  return PLConstants(e.lambda_max, e.lambda_min_nonzero);
}

double mse_sample_smoothness_sup(const Dataset& data) {
  double mx = 0.0;
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    const auto row = data.x.row(i);
    double s = 0.0;
    for (double v : row) s += v * v;
    mx = std::max(mx, s);
  }
  return static_cast<double>(data.x.rows()) * mx;
}

double smoothness_heuristic(const Problem& problem, const Vec& w) {
  const double f = problem.value(w);
  if (f <= 0.0)
    throw std::domain_error("smoothness_heuristic: f(w) = 0, treat the run as converged");
  const Vec g = problem.grad(w);
  return 0.99 * dot(g, g) / (2.0 * f);
}

std::vector<PlCheckRow> pl_inequality_check(const Problem& problem, const PLConstants& constants,
                                            const std::vector<Vec>& points, double f_star) {
  std::vector<PlCheckRow> rows;
  rows.reserve(points.size());
  for (const Vec& p : points) {
    PlCheckRow row;
    row.point = p;
    const Vec g = problem.grad(p);
    row.lhs = 0.5 * dot(g, g);
    row.rhs = constants.mu * (problem.value(p) - f_star);
    row.ok = row.lhs >= row.rhs - 1e-8 * (1.0 + row.rhs);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gmd
