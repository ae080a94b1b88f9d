#pragma once

#include <vector>

#include "mcne/compressor.hpp"
#include "mcne/embedding.hpp"
#include "mcne/graph.hpp"
#include "mcne/matrix.hpp"
#include "mcne/random.hpp"
#include "mcne/train_config.hpp"

namespace mcne {

/// GCN encoder over the normalized adjacency with a trainable input matrix,
/// followed by the compressor and sum decoder.
struct McneTModel {
  DenseMatrix input;                     // G^(0): |V| × d_0
  std::vector<DenseMatrix> gcn_weights;  // W^(k): d_k × d_{k+1}
  CompressorParams compressor;           // latent width = basis width = d
  SparseMatrix a_hat;                    // normalized adjacency of the training graph

  /// Parameters in a fixed order: G^(0), W^(0..l-1), W_c, b_c, B.
  std::vector<DenseMatrix*> parameters();
};

McneTModel init_mcne_t(const Graph& g, const TrainConfig& config, Rng& rng);

/// l rounds of tanh(Â·G·W); returns the top-layer latent matrix.
DenseMatrix gcn_forward(const McneTModel& model);

struct Triplet {
  NodeId anchor = 0;
  NodeId positive = 0;
  NodeId negative = 0;
};

struct TripletStats {
  std::size_t skipped_isolated = 0;   // anchors with no neighbor
  std::size_t skipped_saturated = 0;  // anchors adjacent to every other node
};

/// One uniform neighbor and one uniform non-neighbor per anchor; anchors that
/// admit no triplet are skipped and counted.
std::vector<Triplet> sample_triplets(const Graph& g, std::span<const NodeId> anchors, Rng& rng,
                                     TripletStats* stats = nullptr);

struct TopologyGrads {
  std::vector<double> d_anchor;
  std::vector<double> d_positive;
  std::vector<double> d_negative;
};

/// -ln σ(a·p − a·n).
double loss_topology(std::span<const double> anchor, std::span<const double> positive,
                     std::span<const double> negative, TopologyGrads* grads = nullptr);

struct McneTLoss {
  double topology = 0.0;
  double reconstruction = 0.0;
  double combined = 0.0;
};

/// Mean topology loss over triplets plus beta times mean ‖g_i − ĝ_i‖² over anchors.
/// noise is |V| × (s·t) (empty for noise-free). grads receives one gradient per parameter.
McneTLoss loss_combined(const McneTModel& model, std::span<const NodeId> anchors,
                        std::span<const Triplet> triplets, const DenseMatrix& noise, double tau,
                        double beta, std::vector<DenseMatrix>* grads = nullptr);

/// Noise-free hard codes for every node of the model's graph.
Codebook export_codebook(const McneTModel& model);

/// Hard reconstructions: latent → argmax codes → sum of basis rows.
DenseMatrix hard_forward(const McneTModel& model);

struct McneTEpoch {
  std::size_t epoch = 0;
  double topology = 0.0;
  double reconstruction = 0.0;
  double combined = 0.0;
  double tau = 0.0;
};

struct McneTResult {
  Codebook codebook;
  EmbeddingTable embeddings;  // reconstruct_from_codebook rows
  McneTModel model;           // lowest-training-loss snapshot
  std::vector<McneTEpoch> log;
  std::size_t best_epoch = 0;
  TripletStats triplet_stats;
};

McneTResult train_mcne_t(const Graph& g, const TrainConfig& config);

}  // namespace mcne
