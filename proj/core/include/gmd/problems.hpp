#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gmd/tensor.hpp"

namespace gmd {

struct Dataset {
  Mat x;           // n x d design matrix
  Vec y;           // n targets
  bool noiseless = false;
};

// Throws unless dimensions are positive, entries finite, and (when the
// noiseless flag is set) an interpolating solution exists.
void validate_dataset(const Dataset& data);

// Smoothness / gradient-dominance pair with the order constraint mu <= L
// enforced at construction.
struct PLConstants {
  double L = 0.0;
  double mu = 0.0;
  PLConstants() = default;
  PLConstants(double L_, double mu_);
};

// Differentiable loss with full-batch and per-sample access. The average
// convention is f(w) = (1/n) sum_i sample_value(i, w).
class Problem {
 public:
  virtual ~Problem() = default;
  virtual double value(const Vec& w) const = 0;
  virtual Vec grad(const Vec& w) const = 0;
  virtual double sample_value(std::size_t i, const Vec& w) const = 0;
  virtual Vec sample_grad(std::size_t i, const Vec& w) const = 0;
  virtual std::size_t n_samples() const = 0;
  virtual std::size_t dim() const = 0;
  // 0 for the nonnegative interpolation losses in this toolkit.
  virtual double optimum_value() const { return 0.0; }
};

// Squared loss f(w) = 0.5 |X w - y|^2 with per-sample pieces
// f_i(w) = (n/2)(x_i . w - y_i)^2 so that f = (1/n) sum f_i.
class MseProblem final : public Problem {
 public:
  explicit MseProblem(Dataset data);
  double value(const Vec& w) const override;
  Vec grad(const Vec& w) const override;
  double sample_value(std::size_t i, const Vec& w) const override;
  Vec sample_grad(std::size_t i, const Vec& w) const override;
  std::size_t n_samples() const override { return data_.x.rows(); }
  std::size_t dim() const override { return data_.x.cols(); }
  const Dataset& data() const { return data_; }

 private:
  Dataset data_;
};

enum class Activation { kLeakyRelu, kXPlusSin };

Activation activation_from_string(const std::string& tag);
std::string to_string(Activation a);

// Parameter layout for the one-hidden-layer scalar network: the hidden weight
// matrix W (hidden x d, row-major) followed by the output weights v (hidden).
// No bias terms.
struct MlpLayout {
  std::size_t hidden = 0;
  std::size_t input_dim = 0;
  std::size_t size() const { return hidden * input_dim + hidden; }
  std::size_t w_index(std::size_t unit, std::size_t j) const { return unit * input_dim + j; }
  std::size_t v_index(std::size_t unit) const { return hidden * input_dim + unit; }
};

// Squared loss of the scalar network output o(w; x) = v . act(W x) against the
// targets, same scaling convention as MseProblem. Leaky ReLU uses negative
// slope 0.01 and slope 1 exactly at 0.
class MlpProblem final : public Problem {
 public:
  MlpProblem(Dataset data, std::size_t hidden, Activation act, std::uint64_t init_seed);
  double value(const Vec& w) const override;
  Vec grad(const Vec& w) const override;
  double sample_value(std::size_t i, const Vec& w) const override;
  Vec sample_grad(std::size_t i, const Vec& w) const override;
  std::size_t n_samples() const override { return data_.x.rows(); }
  std::size_t dim() const override { return layout_.size(); }

  const MlpLayout& layout() const { return layout_; }
  // Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per weight; W then v.
  const Vec& initial_params() const { return init_; }
  double output(std::size_t i, const Vec& w) const;

 private:
  Dataset data_;
  MlpLayout layout_;
  Activation act_;
  Vec init_;
};

std::unique_ptr<MseProblem> mse_problem(Dataset data);
std::unique_ptr<MlpProblem> mlp_problem(Dataset data, std::size_t hidden, Activation act,
                                        std::uint64_t init_seed);

// L = lambda_max(X X^T), mu = smallest nonzero eigenvalue, computed through
// the smaller of the two Grams (identical nonzero spectra).
PLConstants pl_smooth_constants(const Dataset& data);

// sup_i L_i for the per-sample squared losses: n * max_i |x_i|^2.
double mse_sample_smoothness_sup(const Dataset& data);

// Crude running smoothness estimate 0.99 * |grad f(w)|^2 / (2 f(w)).
// Throws when f(w) = 0; returns 0 when the gradient vanishes at f(w) > 0.
double smoothness_heuristic(const Problem& problem, const Vec& w);

struct PlCheckRow {
  Vec point;
  double lhs = 0.0;  // 0.5 |grad f|^2
  double rhs = 0.0;  // mu (f - f*)
  bool ok = false;
};

// Gradient-dominance check 0.5 |grad f(x)|^2 >= mu (f(x) - f*) at each point,
// slack 1e-8 * (1 + rhs). Reporting only; callers decide whether to assert.
std::vector<PlCheckRow> pl_inequality_check(const Problem& problem, const PLConstants& constants,
                                            const std::vector<Vec>& points,
                                            double f_star = 0.0);

}  // namespace gmd
