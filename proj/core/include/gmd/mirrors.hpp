#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gmd/tensor.hpp"

namespace gmd {

enum class MirrorKind { kIdentity, kLinear, kTanh, kAdagrad };

struct MirrorBounds {
  double alpha_l = 0.0;  // coercivity: <phi(x)-phi(y), x-y> >= alpha_l |x-y|^2
  double alpha_u = 0.0;  // Lipschitz:  |phi(x)-phi(y)| <= alpha_u |x-y|
};

// Invertible, possibly step-indexed coordinate map defining the dual space of
// the descent update. `t` is the step index; time-independent maps ignore it,
// the accumulator-backed map resolves it against its history when tracking is
// enabled (and to the current state otherwise).
class MirrorMap {
 public:
  virtual ~MirrorMap() = default;
  virtual Vec forward(int t, const Vec& w) const = 0;
  virtual Vec inverse(int t, const Vec& z) const = 0;
  virtual MirrorBounds bounds(int t) const = 0;
  virtual MirrorKind kind() const = 0;
  // J_phi(w) v; diagonal for the coordinate-wise maps.
  virtual Vec jacobian_apply(int t, const Vec& w, const Vec& v) const = 0;

  // Potential psi with phi = grad psi; only time-independent maps expose one.
  virtual bool has_potential() const { return false; }
  virtual double potential(const Vec& /*w*/) const;

  // State update consumed by the optimizer loop; no-op for fixed maps.
  virtual void accumulate(const Vec& /*grad*/) {}
};

class IdentityMirror final : public MirrorMap {
 public:
  Vec forward(int, const Vec& w) const override { return w; }
  Vec inverse(int, const Vec& z) const override { return z; }
  MirrorBounds bounds(int) const override { return {1.0, 1.0}; }
  MirrorKind kind() const override { return MirrorKind::kIdentity; }
  Vec jacobian_apply(int, const Vec&, const Vec& v) const override { return v; }
  bool has_potential() const override { return true; }
  double potential(const Vec& w) const override;
};

// phi(w) = G w for symmetric positive definite G; psi(w) = 0.5 w^T G w.
class LinearMirror final : public MirrorMap {
 public:
  explicit LinearMirror(Mat g);
  Vec forward(int, const Vec& w) const override;
  Vec inverse(int, const Vec& z) const override;
  MirrorBounds bounds(int) const override { return bounds_; }
  MirrorKind kind() const override { return MirrorKind::kLinear; }
  Vec jacobian_apply(int, const Vec&, const Vec& v) const override;
  bool has_potential() const override { return true; }
  double potential(const Vec& w) const override;
  const Mat& matrix() const { return g_; }

 private:
  Mat g_;
  Mat chol_;  // lower factor
  MirrorBounds bounds_;
};

// Coordinate-wise phi(x) = x + beta tanh(x), beta in [0, 1). The scalar slope
// 1 + beta sech^2(x) lies in (1, 1+beta], so bounds are (1, 1+beta).
// psi(x) = sum x^2/2 + beta log cosh x. Inversion is a safeguarded Newton
// solve per coordinate (bracket [z-beta, z+beta], bisection fallback).
class TanhMirror final : public MirrorMap {
 public:
  explicit TanhMirror(double beta);
  Vec forward(int, const Vec& w) const override;
  Vec inverse(int, const Vec& z) const override;
  MirrorBounds bounds(int) const override { return {1.0, 1.0 + beta_}; }
  MirrorKind kind() const override { return MirrorKind::kTanh; }
  Vec jacobian_apply(int, const Vec& w, const Vec& v) const override;
  bool has_potential() const override { return true; }
  double potential(const Vec& w) const override;
  double beta() const { return beta_; }

 private:
  double beta_;
};

// Per-coordinate accumulator of squared gradient coordinates plus an epsilon
// floor keeping the map invertible before a coordinate has seen any signal.
struct AdagradState {
  Vec accum;             // nonnegative, non-decreasing per coordinate
  double epsilon = 1e-12;
};

// Pure accumulation: accum'_i = accum_i + grad_i^2.
AdagradState adagrad_accumulate(AdagradState state, const Vec& grad);
MirrorBounds adagrad_bounds(const AdagradState& state);

// phi^(t)(w)_i = sqrt(accum_i^(t) + eps) * w_i. With history tracking on, each
// accumulate() snapshots the state so forward/inverse/bounds can be replayed
// at any past step index.
class AdagradMirror final : public MirrorMap {
 public:
  explicit AdagradMirror(std::size_t dim, double epsilon = 1e-12);
  Vec forward(int t, const Vec& w) const override;
  Vec inverse(int t, const Vec& z) const override;
  MirrorBounds bounds(int t) const override;
  MirrorKind kind() const override { return MirrorKind::kAdagrad; }
  Vec jacobian_apply(int t, const Vec&, const Vec& v) const override;
  void accumulate(const Vec& grad) override;

  void set_history_tracking(bool on) { track_history_ = on; }
  int history_size() const { return static_cast<int>(history_.size()); }
  const AdagradState& state() const { return state_; }

 private:
  const Vec& accum_at(int t) const;
  AdagradState state_;
  bool track_history_ = false;
  std::vector<Vec> history_;  // history_[t] = accumulator after step-t update
};

std::unique_ptr<MirrorMap> identity_mirror();
std::unique_ptr<MirrorMap> linear_mirror(Mat g);
std::unique_ptr<MirrorMap> tanh_mirror(double beta);
std::unique_ptr<AdagradMirror> adagrad_mirror(std::size_t dim, double epsilon = 1e-12);

// Bregman divergence D_psi(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>.
// Throws when the map exposes no potential (the accumulator-backed map).
double bregman(const MirrorMap& map, const Vec& x, const Vec& y);

struct MirrorBoundsReport {
  double worst_lower_ratio = 0.0;  // min <dphi, dx>/|dx|^2 over sampled pairs
  double worst_upper_ratio = 0.0;  // max |dphi|/|dx| over sampled pairs
  bool ok = false;
  Vec witness_x, witness_y;        // pair attaining a violation, if any
};

// Samples random pairs in [-box, box]^dim and checks the two bilateral
// inequalities against bounds(t) with slack 1e-9.
MirrorBoundsReport verify_mirror_bounds(const MirrorMap& map, int t, int samples, double box,
                                        std::size_t dim, std::uint64_t seed = 0);

}  // namespace gmd
