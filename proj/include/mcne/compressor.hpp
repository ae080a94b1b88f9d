#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcne/matrix.hpp"
#include "mcne/random.hpp"

namespace mcne {

enum class CodeFlavor { kMultiHot, kKd };

/// How t selections range over s basis vectors.
///
/// Multi-hot: every selection may name any of the s rows (duplicates allowed).
/// KD: s = K·D, t = D, and selection j is confined to rows [j·K, (j+1)·K).
struct CodeLayout {
  CodeFlavor flavor = CodeFlavor::kMultiHot;
  std::size_t basis_count = 1;  // s
  std::size_t selections = 1;   // t
  std::size_t block_size = 0;   // K (KD only)

  static CodeLayout multi_hot(std::size_t s, std::size_t t);
  static CodeLayout kd(std::size_t k, std::size_t d);

  /// Throws std::invalid_argument on inconsistent counts.
  void validate() const;

  std::size_t support_begin(std::size_t selection) const {
    return flavor == CodeFlavor::kKd ? selection * block_size : 0;
  }
  std::size_t support_width() const {
    return flavor == CodeFlavor::kKd ? block_size : basis_count;
  }
  /// Width of the compressor's logit layer: s·t.
  std::size_t logit_width() const { return basis_count * selections; }

  std::string flavor_name() const { return flavor == CodeFlavor::kKd ? "kd" : "multi_hot"; }

  friend bool operator==(const CodeLayout&, const CodeLayout&) = default;
};

/// The compressed artifact: shared basis plus t zero-based codes per node.
struct Codebook {
  CodeLayout layout;
  DenseMatrix basis;                   // s × d
  std::vector<std::uint32_t> indexes;  // |V| × t, row-major

  std::size_t node_count() const {
    return layout.selections == 0 ? 0 : indexes.size() / layout.selections;
  }
  std::size_t dim() const { return basis.cols(); }
  std::span<const std::uint32_t> codes(std::size_t node) const {
    return {indexes.data() + node * layout.selections, layout.selections};
  }

  /// Throws std::invalid_argument if any code is out of range or breaks its KD block.
  void validate() const;

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct CompressorParams {
  CodeLayout layout;
  DenseMatrix w_c;    // d_l × (s·t)
  DenseMatrix b_c;    // 1 × (s·t)
  DenseMatrix basis;  // s × d
  double tau = 1.0;
};

/// Glorot-initialized compressor for latent width d_l and output width d.
CompressorParams init_compressor(const CodeLayout& layout, std::size_t latent_dim,
                                 std::size_t output_dim, Rng& rng);

/// Soft selections for one node. Entries outside a KD block have h = 0.
struct SoftAssignment {
  DenseMatrix h;  // t × s, rows are probability vectors
  DenseMatrix y;  // t × s, positive categorical weights
};

/// y = softplus(x_l·W_c + b_c) reshaped row-major into t rows of length s.
DenseMatrix compute_logits(std::span<const double> latent, const CompressorParams& params);

/// h_i = τ-softmax(log y_i + g_i) over each row's support, with the given noise (t × s).
SoftAssignment soft_assignment(const DenseMatrix& y, const DenseMatrix& noise, double tau,
                               const CodeLayout& layout);

/// Draws fresh gumbel noise per row and calls soft_assignment.
SoftAssignment sample_soft_assignment(const DenseMatrix& y, double tau, Rng& rng,
                                      const CodeLayout& layout);

/// KD-flavored sampling; throws if the layout is not a valid KD layout.
SoftAssignment kd_sample(const DenseMatrix& y, double tau, Rng& rng, const CodeLayout& layout);

/// h_row · B
std::vector<double> select_basis(std::span<const double> h_row, const DenseMatrix& basis);

/// Elementwise sum of the selected vectors.
std::vector<double> compose(std::span<const std::vector<double>> selected);

/// Row-wise argmax of h, ties to the lowest index.
std::vector<std::uint32_t> harden(const SoftAssignment& soft);

/// Noise-free export codes: row-wise argmax of log y within each row's support.
std::vector<std::uint32_t> harden_logits(const DenseMatrix& y, const CodeLayout& layout);

/// Sum of the basis rows named by the node's codes.
std::vector<double> reconstruct_from_codebook(const Codebook& cb, std::size_t node);

/// All rows of reconstruct_from_codebook as a |V| × d matrix.
DenseMatrix reconstruct_all(const Codebook& cb);

using BigInt = boost::multiprecision::cpp_int;

/// Number of distinct code rows: s^t for multi-hot, (⌊s/t⌋)^t for KD.
BigInt code_space_size(CodeFlavor flavor, std::size_t s, std::size_t t);

/// Stepwise temperature decay with a floor.
struct TauSchedule {
  double initial = 1.0;
  double minimum = 0.5;
  double decrement = 0.1;
  std::size_t step_epochs = 100;
};

/// max(minimum, initial − decrement·⌊epoch/step_epochs⌋)
double anneal_tau(const TauSchedule& schedule, std::size_t epoch);

// ---------------------------------------------------------------------------
// Batched compressor + sum decoder, shared by both models.
// ---------------------------------------------------------------------------

struct CompressorForward {
  DenseMatrix pre;     // n × (s·t), x_l·W_c + b_c
  DenseMatrix h;       // n × (s·t), soft selections laid out per row as t groups of s
  DenseMatrix output;  // n × d, Σ_i h_i·B
};

/// Soft forward pass. noise is n × (s·t) gumbel noise; an empty matrix means no noise.
CompressorForward compressor_forward(const CompressorParams& params, const DenseMatrix& latent,
                                     const DenseMatrix& noise, double tau);

struct CompressorGrads {
  DenseMatrix d_latent;
  DenseMatrix d_w;
  DenseMatrix d_b;
  DenseMatrix d_basis;
};

CompressorGrads compressor_backward(const CompressorParams& params, const DenseMatrix& latent,
                                    const CompressorForward& forward, const DenseMatrix& d_output,
                                    double tau);

/// Noise-free hard codes for every latent row (n × t, row-major).
std::vector<std::uint32_t> compressor_codes(const CompressorParams& params,
                                            const DenseMatrix& latent);

}  // namespace mcne
