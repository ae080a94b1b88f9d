#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcne/matrix.hpp"

namespace mcne {

using NodeId = std::uint32_t;
using NodePair = std::pair<NodeId, NodeId>;

/// Thrown for malformed input files; the message carries path and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected simple graph with sorted adjacency lists. Immutable once built.
class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list. Duplicates (in either orientation) collapse;
  /// self-loops and out-of-range ids throw std::invalid_argument.
  Graph(std::size_t node_count, std::span<const NodePair> edges);

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t degree(NodeId v) const { return adjacency_[v].size(); }
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  /// Every edge once, as (min, max), in ascending order.
  std::vector<NodePair> edges() const;

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Per-node label sets (multi-label allowed).
struct LabelTable {
  std::vector<std::vector<std::uint32_t>> labels;  // indexed by node id, sorted
  std::size_t label_count = 0;                     // C; label ids lie in [0, C)

  std::size_t node_count() const { return labels.size(); }
};

struct EdgeSplit {
  Graph train_graph;
  std::vector<NodePair> positives;  // held-out edges
  std::vector<NodePair> negatives;  // non-edges of the original graph
};

/// Reads "u v" lines; '#' starts a comment. node_count = 1 + max id.
Graph load_edge_list(const std::filesystem::path& path);
void save_edge_list(const Graph& g, const std::filesystem::path& path);

/// Reads "node_id label_id" lines. Nodes beyond the highest id seen are
/// unlabeled; pass node_count to size the table to a graph.
LabelTable load_labels(const std::filesystem::path& path, std::size_t node_count = 0);
void save_labels(const LabelTable& labels, const std::filesystem::path& path);

struct SbmResult {
  Graph graph;
  LabelTable labels;
};

/// Stochastic block model: intra-block pairs are edges with probability
/// p_in, inter-block pairs with p_out. Labels are block ids.
SbmResult generate_sbm(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                       std::uint64_t seed);

/// D̃^{-1/2} (T + I) D̃^{-1/2}, stored by rows.
SparseMatrix normalize_adjacency(const Graph& g);

/// Removes ⌊fraction·|E|⌋ edges uniformly and samples as many non-edges.
EdgeSplit split_edges(const Graph& g, double holdout_fraction, std::uint64_t seed);

/// Uniform random walks; walks_per_node walks start at every node.
std::vector<std::vector<NodeId>> random_walks(const Graph& g, std::size_t walks_per_node,
                                              std::size_t walk_length, std::uint64_t seed);

}  // namespace mcne
