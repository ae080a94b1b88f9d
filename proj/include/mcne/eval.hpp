#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mcne/compressor.hpp"
#include "mcne/embedding.hpp"
#include "mcne/graph.hpp"

namespace mcne {

// ---------------------------------------------------------------------------
// Node classification
// ---------------------------------------------------------------------------

struct LogRegConfig {
  double l2 = 1e-4;
  double learning_rate = 0.1;
  std::size_t epochs = 500;
};

/// One binary logistic regression per label. Labels whose training column is
/// all-positive or all-negative fall back to a constant prior score.
struct OvrModel {
  DenseMatrix weights;              // C × d
  std::vector<double> bias;         // C
  std::vector<double> constant;     // prior score for degenerate labels, else NaN
  std::size_t label_count() const { return bias.size(); }

  /// Per-label scores (probabilities) for one feature row.
  std::vector<double> scores(std::span<const double> x) const;
};

/// Mean binary cross-entropy + (l2/2)‖w‖² for one label; gradients into dw/db if non-empty.
double logreg_loss(std::span<const double> w, double b, const DenseMatrix& x,
                   std::span<const std::uint8_t> targets, double l2, std::span<double> dw = {},
                   double* db = nullptr);

/// Full-batch gradient descent from zero weights; deterministic.
OvrModel train_logreg_ovr(const DenseMatrix& features,
                          std::span<const std::vector<std::uint32_t>> labels,
                          std::size_t label_count, const LogRegConfig& config = {});

/// The k highest-scoring label ids, ties to the lower id, returned ascending.
std::vector<std::uint32_t> predict_topk(std::span<const double> scores, std::size_t k);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro F1 over pooled counts; macro F1 as the mean over all C labels (zero-support labels count as 0).
F1Scores f1_scores(std::span<const std::vector<std::uint32_t>> predicted,
                   std::span<const std::vector<std::uint32_t>> truth, std::size_t label_count);

struct ClassificationReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t runs = 0;
};

/// Averages micro/macro F1 over `runs` uniform splits of the labeled nodes,
/// training on ⌊train_fraction·n⌋ of them and predicting top-k on the rest.
ClassificationReport run_classification_eval(const DenseMatrix& features, const LabelTable& labels,
                                             double train_fraction, std::size_t runs,
                                             std::uint64_t seed, const LogRegConfig& config = {});

// ---------------------------------------------------------------------------
// Link prediction
// ---------------------------------------------------------------------------

/// a·b/(‖a‖‖b‖), defined as 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Fraction of (pos, neg) pairs ordered correctly, ties counting half.
double auc_score(std::span<const double> positive, std::span<const double> negative);

/// Cosine-scored AUC of held-out edges against sampled non-edges.
double run_linkpred_eval(const DenseMatrix& embeddings, const EdgeSplit& split);

// ---------------------------------------------------------------------------
// Memory accounting
// ---------------------------------------------------------------------------

struct MemoryModel {
  std::uint64_t float_bytes = 16;
  std::uint64_t int_bytes = 12;
};

struct OneHotLayout {
  std::uint64_t nodes = 0;
  std::uint64_t dim = 0;
};
struct MultiHotLayout {
  std::uint64_t s = 0;
  std::uint64_t t = 0;
  std::uint64_t dim = 0;
  std::uint64_t nodes = 0;
};
struct KdLayout {
  std::uint64_t k = 0;
  std::uint64_t d_blocks = 0;
  std::uint64_t dim = 0;
  std::uint64_t nodes = 0;
};
using StorageLayout = std::variant<OneHotLayout, MultiHotLayout, KdLayout>;

struct MemoryCost {
  std::uint64_t params = 0;
  std::uint64_t bytes = 0;
};

MemoryCost memory_report(const StorageLayout& layout, const MemoryModel& mm = {});

/// Storage layout matching a codebook's flavor and sizes.
StorageLayout layout_of(const Codebook& cb);

/// Exact half-up rounding of numerator/denominator to 2 decimals, e.g. "40.40".
std::string format_ratio_2dp(std::uint64_t numerator, std::uint64_t denominator);
/// Parameter count in millions, 2 decimals.
std::string format_million(std::uint64_t count);
/// Bytes in MB (2^20), 2 decimals.
std::string format_megabytes(std::uint64_t bytes);

struct CompressionRatios {
  double params = 0.0;          // exact: original / compressed
  double bytes = 0.0;
  double params_display = 0.0;  // ratio of the 2-decimal displayed values (table convention)
  double bytes_display = 0.0;
};

CompressionRatios compression_ratios(const MemoryCost& original, const MemoryCost& compressed);

/// counts[k] = number of code entries equal to k.
std::vector<std::size_t> basis_utilization(const Codebook& cb);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EvalReport {
  bool has_classification = false;
  ClassificationReport classification;
  bool has_linkpred = false;
  double auc = 0.0;

  MemoryCost original;
  MemoryCost compressed;
  bool has_codebook = false;
  CompressionRatios ratios;
  std::vector<std::size_t> utilization;

  /// Human-readable multi-line summary.
  std::string to_text() const;
  /// "metric,value" lines.
  std::string to_csv() const;
};

}  // namespace mcne
