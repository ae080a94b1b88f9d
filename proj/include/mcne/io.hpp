#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "mcne/compressor.hpp"
#include "mcne/embedding.hpp"
#include "mcne/graph.hpp"
#include "mcne/mcne_p.hpp"
#include "mcne/mcne_t.hpp"

namespace mcne {

/// Shortest-exact (17 significant digit) decimal text for a double.
std::string format_real(double value);

// Embedding file: "|V| d", then |V| lines of d reals.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

// Codebook file: "s t d flavor [K D]", then s basis lines of d reals, then one
// line of t zero-based codes per node.
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

// Split file: "# positives P negatives N", then "u v 1" for held-out edges and
// "u v 0" for sampled non-edges. The training graph is stored as an edge list.
void save_split_pairs(const EdgeSplit& split, const std::filesystem::path& path);
/// Reads pairs into split.positives / split.negatives; the train graph is left empty.
EdgeSplit load_split_pairs(const std::filesystem::path& path);

void save_loss_log(std::span<const McnePEpoch> log, const std::filesystem::path& path);
void save_loss_log(std::span<const McneTEpoch> log, const std::filesystem::path& path);

}  // namespace mcne
