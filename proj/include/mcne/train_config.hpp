#pragma once

#include <cstdint>

#include "mcne/compressor.hpp"

namespace mcne {

/// Hyperparameters shared by the two compact-embedding models.
/// Defaults follow the BlogCatalog/DBLP settings (s=128, t=8).
struct TrainConfig {
  CodeLayout layout = CodeLayout::multi_hot(128, 8);

  std::size_t dim = 0;  // embedding width d; 0 = take it from the input table (pre-learned model)

  // Pre-learned model encoder: encoder_layers tanh layers, widths default to s/2.
  std::size_t encoder_layers = 2;
  std::size_t hidden_width = 0;  // 0 = s/2

  // End-to-end model: gcn_layers propagation layers over the normalized adjacency.
  std::size_t gcn_layers = 2;
  std::size_t gcn_hidden = 1000;
  std::size_t input_dim = 0;  // width of the trainable input matrix; 0 = dim
  double beta = 0.3;          // weight of the reconstruction term

  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  std::size_t epochs = 500;
  TauSchedule tau;
  double validation_fraction = 0.05;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// s/2 (at least 1): the width of the latent fed to the compressor.
  std::size_t latent_dim() const;
};

}  // namespace mcne
