#pragma once

#include <cstddef>
#include <span>

#include "mcne/matrix.hpp"

namespace mcne {

/// One real-valued row per node: the conventional one-hot-indexed layout.
struct EmbeddingTable {
  DenseMatrix matrix;  // |V| × d

  std::size_t node_count() const { return matrix.rows(); }
  std::size_t dim() const { return matrix.cols(); }
  std::span<const double> row(std::size_t v) const { return matrix.row(v); }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

}  // namespace mcne
