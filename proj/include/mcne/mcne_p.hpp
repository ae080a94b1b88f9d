#pragma once

#include <vector>

#include "mcne/compressor.hpp"
#include "mcne/embedding.hpp"
#include "mcne/matrix.hpp"
#include "mcne/random.hpp"
#include "mcne/train_config.hpp"

namespace mcne {

/// Encoder (tanh MLP) → compressor → sum decoder over pre-learned embeddings.
struct McnePModel {
  std::vector<DenseMatrix> weights;  // W^(k): in × out
  std::vector<DenseMatrix> biases;   // b^(k): 1 × out
  CompressorParams compressor;

  /// Parameters in a fixed order: W1, b1, ..., Wl, bl, W_c, b_c, B.
  std::vector<DenseMatrix*> parameters();
  std::vector<const DenseMatrix*> parameters() const;
};

/// Encoder widths d → ... → d_l for the configured depth.
std::vector<std::size_t> encoder_widths(std::size_t input_dim, const TrainConfig& config);

McnePModel init_mcne_p(std::size_t input_dim, const TrainConfig& config, Rng& rng);

/// Top-layer tanh activations for a batch of rows.
DenseMatrix encode_batch(const DenseMatrix& x, const McnePModel& model);
std::vector<double> encode(std::span<const double> x, const McnePModel& model);

struct McnePForward {
  std::vector<double> reconstruction;
  SoftAssignment soft;
};

/// Soft forward for one row with fresh gumbel noise.
McnePForward forward(std::span<const double> x, const McnePModel& model, double tau, Rng& rng);

/// Soft forward for one row with caller-supplied noise (t × s).
McnePForward forward(std::span<const double> x, const McnePModel& model, double tau,
                     const DenseMatrix& noise);

/// Reconstruction loss (1/n)Σ‖x_i − x̂_i‖² on a batch with fixed noise (n × s·t, or empty
/// for noise-free). If grads is non-null it receives one gradient per parameter.
double mcne_p_loss(const McnePModel& model, const DenseMatrix& x, const DenseMatrix& noise,
                   double tau, std::vector<DenseMatrix>* grads = nullptr);

/// Hard codes for every row of E: encode, then noise-free argmax per selection.
Codebook export_codebook(const McnePModel& model, const EmbeddingTable& table);

struct McnePEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double tau = 0.0;
};

struct McnePResult {
  Codebook codebook;
  McnePModel model;  // best-validation snapshot
  std::vector<McnePEpoch> log;
  double initial_validation_loss = 0.0;
  double best_validation_loss = 0.0;
  std::size_t best_epoch = 0;  // meaningless when log is empty
  std::vector<std::size_t> validation_rows;
};

/// Validation loss of a model on the given rows, using the fixed validation noise stream.
double validation_loss(const McnePModel& model, const EmbeddingTable& table,
                       std::span<const std::size_t> rows, double tau, std::uint64_t seed);

McnePResult train_mcne_p(const EmbeddingTable& table, const TrainConfig& config);

}  // namespace mcne
