#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcne/embedding.hpp"
#include "mcne/graph.hpp"

namespace mcne {

struct SgnsConfig {
  std::size_t dim = 128;
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 40;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;  // decays linearly to 1e-4 of its start value
  std::uint64_t seed = 1;
};

/// Input-side (exported) and output-side skip-gram tables.
struct SgnsModel {
  DenseMatrix input;   // |V| × d, v vectors
  DenseMatrix output;  // |V| × d, u vectors
};

/// One positive (center, context) pair plus its sampled negatives.
struct SgnsSample {
  NodeId center = 0;
  NodeId context = 0;
  std::vector<NodeId> negatives;
};

/// Loss of a single sample: -ln σ(u_ctx·v) - Σ ln σ(-u_neg·v).
/// Writes gradients w.r.t. v, u_ctx and each u_neg when the spans are non-empty.
double sgns_pair_loss(std::span<const double> v, std::span<const double> u_context,
                      std::span<const std::span<const double>> u_negatives,
                      std::span<double> dv = {}, std::span<double> du_context = {},
                      std::span<const std::span<double>> du_negatives = {});

/// Mean sample loss over a fixed sample set; accumulates full-batch gradients into grad if given.
double sgns_loss(const SgnsModel& model, std::span<const SgnsSample> samples,
                 SgnsModel* grad = nullptr);

/// Seeded initialization: input uniform in ±0.5/d, output zero.
SgnsModel init_sgns(std::size_t node_count, std::size_t dim, std::uint64_t seed);

/// Random-walk skip-gram with uniform negative sampling; returns the input table.
EmbeddingTable train_sgns(const Graph& g, const SgnsConfig& config);

}  // namespace mcne
