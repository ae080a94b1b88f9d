#include "mcne/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcne {

DenseMatrix affine(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& b) {
  if (x.cols() != w.rows()) {
    throw ShapeError("affine: input " + x.shape_string() + " does not conform to weight " +
                     w.shape_string());
  }
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("affine: bias " + b.shape_string() + " does not conform to weight " +
                     w.shape_string());
  }
  DenseMatrix out = matmul(x, w);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] += b(0, j);
  }
  return out;
}

AffineGrads affine_backward(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& d_out) {
  if (d_out.rows() != x.rows() || d_out.cols() != w.cols()) {
    throw ShapeError("affine_backward: upstream " + d_out.shape_string() + " vs input " +
                     x.shape_string() + " and weight " + w.shape_string());
  }
  return {matmul_nt(d_out, w), matmul_tn(x, d_out), column_sums(d_out)};
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_softplus(double x) {
  // softplus(x) = e^x (1 - e^x/2 + ...) for x << 0
  if (x < -30.0) return x + std::log1p(-0.5 * std::exp(x));
  return std::log(softplus(x));
}

double log_softplus_derivative(double x) {
  if (x < -30.0) return 1.0 - 0.5 * std::exp(x);
  return sigmoid(x) / softplus(x);
}

DenseMatrix activation(const DenseMatrix& x, Activation kind) {
  DenseMatrix out(x.rows(), x.cols());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = kind == Activation::kTanh ? std::tanh(src[i]) : softplus(src[i]);
  }
  return out;
}

DenseMatrix activation_derivative(const DenseMatrix& x, Activation kind) {
  DenseMatrix out(x.rows(), x.cols());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (kind == Activation::kTanh) {
      const double t = std::tanh(src[i]);
      dst[i] = 1.0 - t * t;
    } else {
      dst[i] = sigmoid(src[i]);
    }
  }
  return out;
}

double gumbel_from_uniform(double u) {
  u = std::clamp(u, kGumbelEpsilon, 1.0 - kGumbelEpsilon);
  return -std::log(-std::log(u));
}

DenseMatrix sample_standard_gumbel(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix out(rows, cols);
  for (double& g : out.data()) g = gumbel_from_uniform(rng.uniform());
  return out;
}

std::vector<double> tau_softmax(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau_softmax: tau must be > 0");
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - peak) / tau);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> tau_softmax_backward(std::span<const double> p, std::span<const double> dp,
                                         double tau) {
  const double inner = dot(p, dp);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (dp[i] - inner) / tau;
  return out;
}

double mse_loss(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "mse_loss");
  if (a.rows() == 0) return 0.0;
  double total = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    total += diff * diff;
  }
  return total / static_cast<double>(a.rows());
}

DenseMatrix mse_loss_grad(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "mse_loss_grad");
  DenseMatrix out(a.rows(), a.cols());
  if (a.rows() == 0) return out;
  const double scale = 2.0 / static_cast<double>(a.rows());
  auto x = a.data();
  auto y = b.data();
  auto g = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = scale * (x[i] - y[i]);
  return out;
}

DenseMatrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix out(fan_in, fan_out);
  for (double& v : out.data()) v = rng.uniform(-limit, limit);
  return out;
}

void AdamOptimizer::step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("AdamOptimizer: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const DenseMatrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) {
    throw ShapeError("AdamOptimizer: parameter count changed between steps");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(*params[k], grads[k], "AdamOptimizer gradient");
    require_same_shape(*params[k], m_[k], "AdamOptimizer moment");
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    auto g = grads[k].data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void AdamOptimizer::step(DenseMatrix& param, const DenseMatrix& grad) {
  DenseMatrix* ptr = &param;
  step(std::span<DenseMatrix* const>(&ptr, 1), std::span<const DenseMatrix>(&grad, 1));
}

double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> analytic, std::span<const double> point, double h) {
  if (analytic.size() != point.size()) {
    throw ShapeError("grad_check: gradient length " + std::to_string(analytic.size()) +
                     " vs point length " + std::to_string(point.size()));
  }
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be > 0");
  std::vector<double> probe(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = f(probe);
    probe[i] = saved - h;
    const double down = f(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("grad_check: non-finite function value at coordinate " +
                              std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

std::vector<double> flatten(std::span<const DenseMatrix> mats) {
  std::vector<double> out;
  for (const auto& m : mats) out.insert(out.end(), m.data().begin(), m.data().end());
  return out;
}

void unflatten(std::span<const double> flat, std::span<DenseMatrix* const> mats) {
  std::size_t total = 0;
  for (const DenseMatrix* m : mats) total += m->size();
  if (total != flat.size()) {
    throw ShapeError("unflatten: " + std::to_string(flat.size()) + " values for " +
                     std::to_string(total) + " slots");
  }
  std::size_t offset = 0;
  for (DenseMatrix* m : mats) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), m->size(), m->data().begin());
    offset += m->size();
  }
}

}  // namespace mcne
