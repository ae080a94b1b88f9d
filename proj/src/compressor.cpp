#include "mcne/compressor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcne/core_math.hpp"

namespace mcne {

CodeLayout CodeLayout::multi_hot(std::size_t s, std::size_t t) {
  CodeLayout layout{CodeFlavor::kMultiHot, s, t, 0};
  layout.validate();
  return layout;
}

CodeLayout CodeLayout::kd(std::size_t k, std::size_t d) {
  CodeLayout layout{CodeFlavor::kKd, k * d, d, k};
  layout.validate();
  return layout;
}

void CodeLayout::validate() const {
  if (basis_count < 1 || selections < 1) {
    throw std::invalid_argument("CodeLayout: s and t must be >= 1 (got s=" +
                                std::to_string(basis_count) + ", t=" + std::to_string(selections) +
                                ")");
  }
  if (flavor == CodeFlavor::kKd && (block_size < 1 || block_size * selections != basis_count)) {
    throw std::invalid_argument("CodeLayout: KD requires s = K*D (s=" + std::to_string(basis_count) +
                                ", K=" + std::to_string(block_size) +
                                ", D=" + std::to_string(selections) + ")");
  }
}

void Codebook::validate() const {
  layout.validate();
  if (basis.rows() != layout.basis_count) {
    throw std::invalid_argument("Codebook: basis has " + std::to_string(basis.rows()) +
                                " rows, expected s=" + std::to_string(layout.basis_count));
  }
  if (indexes.size() % layout.selections != 0) {
    throw std::invalid_argument("Codebook: index count not a multiple of t");
  }
  for (std::size_t i = 0; i < indexes.size(); ++i) {
    const std::size_t column = i % layout.selections;
    const std::size_t begin = layout.support_begin(column);
    if (indexes[i] < begin || indexes[i] >= begin + layout.support_width()) {
      throw std::invalid_argument("Codebook: code " + std::to_string(indexes[i]) + " of node " +
                                  std::to_string(i / layout.selections) + " outside [" +
                                  std::to_string(begin) + ", " +
                                  std::to_string(begin + layout.support_width()) + ")");
    }
  }
}

CompressorParams init_compressor(const CodeLayout& layout, std::size_t latent_dim,
                                 std::size_t output_dim, Rng& rng) {
  layout.validate();
  CompressorParams p;
  p.layout = layout;
  p.w_c = glorot_uniform(latent_dim, layout.logit_width(), rng);
  p.b_c = DenseMatrix(1, layout.logit_width());
  p.basis = glorot_uniform(layout.basis_count, output_dim, rng);
  return p;
}

DenseMatrix compute_logits(std::span<const double> latent, const CompressorParams& params) {
  const auto pre = affine(DenseMatrix::row_vector(latent), params.w_c, params.b_c);
  const std::size_t s = params.layout.basis_count;
  const std::size_t t = params.layout.selections;
  if (pre.cols() != s * t) {
    throw ShapeError("compute_logits: W_c output width " + std::to_string(pre.cols()) +
                     " != s*t = " + std::to_string(s * t));
  }
  // Row-major reshape: entries [i·s, (i+1)·s) form y^(i).
  DenseMatrix y(t, s);
  for (std::size_t k = 0; k < s * t; ++k) y.data()[k] = softplus(pre(0, k));
  return y;
}

SoftAssignment soft_assignment(const DenseMatrix& y, const DenseMatrix& noise, double tau,
                               const CodeLayout& layout) {
  if (y.rows() != layout.selections || y.cols() != layout.basis_count) {
    throw ShapeError("soft_assignment: weights " + y.shape_string() + " do not match t x s = (" +
                     std::to_string(layout.selections) + "x" + std::to_string(layout.basis_count) +
                     ")");
  }
  if (!noise.empty()) require_same_shape(y, noise, "soft_assignment noise");
  SoftAssignment out{DenseMatrix(y.rows(), y.cols()), y};
  std::vector<double> logits(layout.support_width());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const std::size_t begin = layout.support_begin(i);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      logits[k] = std::log(y(i, begin + k)) + (noise.empty() ? 0.0 : noise(i, begin + k));
    }
    const auto h = tau_softmax(logits, tau);
    std::copy(h.begin(), h.end(), out.h.row(i).begin() + static_cast<std::ptrdiff_t>(begin));
  }
  return out;
}

SoftAssignment sample_soft_assignment(const DenseMatrix& y, double tau, Rng& rng,
                                      const CodeLayout& layout) {
  return soft_assignment(y, sample_standard_gumbel(y.rows(), y.cols(), rng), tau, layout);
}

SoftAssignment kd_sample(const DenseMatrix& y, double tau, Rng& rng, const CodeLayout& layout) {
  if (layout.flavor != CodeFlavor::kKd) throw std::invalid_argument("kd_sample: layout is not KD");
  layout.validate();
  return sample_soft_assignment(y, tau, rng, layout);
}

std::vector<double> select_basis(std::span<const double> h_row, const DenseMatrix& basis) {
  if (h_row.size() != basis.rows()) {
    throw ShapeError("select_basis: selection length " + std::to_string(h_row.size()) +
                     " vs basis " + basis.shape_string());
  }
  std::vector<double> out(basis.cols(), 0.0);
  for (std::size_t k = 0; k < h_row.size(); ++k) {
    if (h_row[k] == 0.0) continue;
    auto b = basis.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += h_row[k] * b[j];
  }
  return out;
}

std::vector<double> compose(std::span<const std::vector<double>> selected) {
  if (selected.empty()) throw std::invalid_argument("compose: need at least one selection");
  std::vector<double> out(selected.front().size(), 0.0);
  for (const auto& v : selected) {
    if (v.size() != out.size()) throw ShapeError("compose: inconsistent vector lengths");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[j];
  }
  return out;
}

namespace {

std::uint32_t argmax_lowest(std::span<const double> values, std::size_t begin, std::size_t width) {
  std::size_t best = begin;
  for (std::size_t k = begin + 1; k < begin + width; ++k) {
    if (values[k] > values[best]) best = k;
  }
  return static_cast<std::uint32_t>(best);
}

}  // namespace

std::vector<std::uint32_t> harden(const SoftAssignment& soft) {
  std::vector<std::uint32_t> codes(soft.h.rows());
  for (std::size_t i = 0; i < soft.h.rows(); ++i) codes[i] = argmax_lowest(soft.h.row(i), 0, soft.h.cols());
  return codes;
}

std::vector<std::uint32_t> harden_logits(const DenseMatrix& y, const CodeLayout& layout) {
  std::vector<std::uint32_t> codes(y.rows());
  std::vector<double> log_y(y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t k = 0; k < y.cols(); ++k) log_y[k] = std::log(y(i, k));
    codes[i] = argmax_lowest(log_y, layout.support_begin(i), layout.support_width());
  }
  return codes;
}

std::vector<double> reconstruct_from_codebook(const Codebook& cb, std::size_t node) {
  if (node >= cb.node_count()) {
    throw std::out_of_range("reconstruct_from_codebook: node " + std::to_string(node) +
                            " out of range for " + std::to_string(cb.node_count()) + " nodes");
  }
  std::vector<double> out(cb.dim(), 0.0);
  for (auto code : cb.codes(node)) {
    auto b = cb.basis.row(code);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += b[j];
  }
  return out;
}

DenseMatrix reconstruct_all(const Codebook& cb) {
  DenseMatrix out(cb.node_count(), cb.dim());
  for (std::size_t v = 0; v < cb.node_count(); ++v) {
    const auto row = reconstruct_from_codebook(cb, v);
    std::copy(row.begin(), row.end(), out.row(v).begin());
  }
  return out;
}

BigInt code_space_size(CodeFlavor flavor, std::size_t s, std::size_t t) {
  const BigInt base = flavor == CodeFlavor::kKd ? BigInt(s / t) : BigInt(s);
  return boost::multiprecision::pow(base, static_cast<unsigned>(t));
}

double anneal_tau(const TauSchedule& schedule, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / schedule.step_epochs);
  return std::max(schedule.minimum, schedule.initial - schedule.decrement * steps);
}

CompressorForward compressor_forward(const CompressorParams& params, const DenseMatrix& latent,
                                     const DenseMatrix& noise, double tau) {
  const CodeLayout& layout = params.layout;
  const std::size_t s = layout.basis_count;
  CompressorForward fwd;
  fwd.pre = affine(latent, params.w_c, params.b_c);
  if (!noise.empty()) require_same_shape(fwd.pre, noise, "compressor_forward noise");
  fwd.h = DenseMatrix(fwd.pre.rows(), fwd.pre.cols());
  std::vector<double> logits(layout.support_width());
  for (std::size_t n = 0; n < fwd.pre.rows(); ++n) {
    for (std::size_t i = 0; i < layout.selections; ++i) {
      const std::size_t offset = i * s + layout.support_begin(i);
      for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = log_softplus(fwd.pre(n, offset + k)) + (noise.empty() ? 0.0 : noise(n, offset + k));
      }
      const auto h = tau_softmax(logits, tau);
      std::copy(h.begin(), h.end(), fwd.h.row(n).begin() + static_cast<std::ptrdiff_t>(offset));
    }
  }
  // output[n] = Σ_i h[n, i] · B, i.e. the per-row sum of the t groups times B.
  DenseMatrix summed(fwd.pre.rows(), s);
  for (std::size_t n = 0; n < fwd.pre.rows(); ++n) {
    auto src = fwd.h.row(n);
    auto dst = summed.row(n);
    for (std::size_t i = 0; i < layout.selections; ++i) {
      for (std::size_t k = 0; k < s; ++k) dst[k] += src[i * s + k];
    }
  }
  fwd.output = matmul(summed, params.basis);
  return fwd;
}

CompressorGrads compressor_backward(const CompressorParams& params, const DenseMatrix& latent,
                                    const CompressorForward& forward, const DenseMatrix& d_output,
                                    double tau) {
  const CodeLayout& layout = params.layout;
  const std::size_t s = layout.basis_count;
  const std::size_t n_rows = latent.rows();
  require_same_shape(forward.output, d_output, "compressor_backward");

  DenseMatrix summed(n_rows, s);
  for (std::size_t n = 0; n < n_rows; ++n) {
    for (std::size_t i = 0; i < layout.selections; ++i) {
      for (std::size_t k = 0; k < s; ++k) summed(n, k) += forward.h(n, i * s + k);
    }
  }
  CompressorGrads g;
  g.d_basis = matmul_tn(summed, d_output);
  const DenseMatrix dh = matmul_nt(d_output, params.basis);  // n × s, shared by all groups

  DenseMatrix d_pre(n_rows, layout.logit_width());
  const std::size_t width = layout.support_width();
  for (std::size_t n = 0; n < n_rows; ++n) {
    for (std::size_t i = 0; i < layout.selections; ++i) {
      const std::size_t begin = layout.support_begin(i);
      const std::size_t offset = i * s + begin;
      const auto d_logits = tau_softmax_backward(forward.h.row(n).subspan(offset, width),
                                                 dh.row(n).subspan(begin, width), tau);
      for (std::size_t k = 0; k < width; ++k) {
        d_pre(n, offset + k) = d_logits[k] * log_softplus_derivative(forward.pre(n, offset + k));
      }
    }
  }
  auto affine_grads = affine_backward(latent, params.w_c, d_pre);
  g.d_latent = std::move(affine_grads.dx);
  g.d_w = std::move(affine_grads.dw);
  g.d_b = std::move(affine_grads.db);
  return g;
}

std::vector<std::uint32_t> compressor_codes(const CompressorParams& params,
                                            const DenseMatrix& latent) {
  const CodeLayout& layout = params.layout;
  const std::size_t s = layout.basis_count;
  const auto pre = affine(latent, params.w_c, params.b_c);
  std::vector<std::uint32_t> codes;
  codes.reserve(latent.rows() * layout.selections);
  std::vector<double> log_y(s);
  for (std::size_t n = 0; n < pre.rows(); ++n) {
    for (std::size_t i = 0; i < layout.selections; ++i) {
      for (std::size_t k = 0; k < s; ++k) log_y[k] = log_softplus(pre(n, i * s + k));
      codes.push_back(argmax_lowest(log_y, layout.support_begin(i), layout.support_width()));
    }
  }
  return codes;
}

}  // namespace mcne
