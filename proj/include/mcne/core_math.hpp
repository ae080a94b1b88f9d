#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mcne/matrix.hpp"
#include "mcne/random.hpp"

namespace mcne {

enum class Activation { kTanh, kSoftplus };

// ---------------------------------------------------------------------------
// Forward ops and their hand-derived backward passes.
// ---------------------------------------------------------------------------

/// out = x·W + b, with b a 1×out row broadcast over rows.
DenseMatrix affine(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& b);

struct AffineGrads {
  DenseMatrix dx;
  DenseMatrix dw;
  DenseMatrix db;
};

/// Backward of affine given upstream gradient d_out.
AffineGrads affine_backward(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& d_out);

double softplus(double x);
double sigmoid(double x);
/// ln(softplus(x)), accurate for very negative x where softplus underflows.
double log_softplus(double x);
/// d/dx ln(softplus(x)) = sigmoid(x) / softplus(x).
double log_softplus_derivative(double x);

DenseMatrix activation(const DenseMatrix& x, Activation kind);

/// Elementwise derivative of the activation evaluated at x (pre-activation).
DenseMatrix activation_derivative(const DenseMatrix& x, Activation kind);

/// Clamp bound for the uniform draw fed into the double logarithm.
inline constexpr double kGumbelEpsilon = 1e-12;

/// g = -ln(-ln(u)) for a single uniform u, clamped to (eps, 1 - eps).
double gumbel_from_uniform(double u);

DenseMatrix sample_standard_gumbel(std::size_t rows, std::size_t cols, Rng& rng);

/// exp(logits/tau) normalized, computed with max subtraction.
std::vector<double> tau_softmax(std::span<const double> logits, double tau);

/// Backward of tau_softmax: given output p and upstream dp, returns d logits.
std::vector<double> tau_softmax_backward(std::span<const double> p, std::span<const double> dp,
                                         double tau);

/// (1/rows) Σ_i ‖a_i − b_i‖²
double mse_loss(const DenseMatrix& a, const DenseMatrix& b);
/// Gradient of mse_loss with respect to a: 2(a − b)/rows.
DenseMatrix mse_loss_grad(const DenseMatrix& a, const DenseMatrix& b);

/// Uniform in ±sqrt(6/(fan_in + fan_out)).
DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer holding first/second moments per parameter.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(AdamConfig config) : config_(config) {}

  /// Applies one bias-corrected update to every parameter. Moments are
  /// allocated on first use and must keep matching shapes afterwards.
  void step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads);

  /// Single-parameter convenience overload.
  void step(DenseMatrix& param, const DenseMatrix& grad);

  std::uint64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<DenseMatrix>& first_moments() const { return m_; }
  const std::vector<DenseMatrix>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<DenseMatrix> m_;
  std::vector<DenseMatrix> v_;
  std::uint64_t step_count_ = 0;
};

// ---------------------------------------------------------------------------
// Finite-difference checking
// ---------------------------------------------------------------------------

/// Max over coordinates of |analytic − central difference| / max(1, |analytic|).
/// Throws std::domain_error if f is non-finite at any probed point.
double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> analytic, std::span<const double> point,
                  double h = 1e-5);

/// Flattens a list of matrices into one vector, in order.
std::vector<double> flatten(std::span<const DenseMatrix> mats);
/// Writes flat values back into matrices of matching total size.
void unflatten(std::span<const double> flat, std::span<DenseMatrix* const> mats);

}  // namespace mcne
