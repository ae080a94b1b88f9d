#include "mcne/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mcne/core_math.hpp"
#include "mcne/random.hpp"

namespace mcne {

std::vector<double> OvrModel::scores(std::span<const double> x) const {
  std::vector<double> out(label_count());
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = std::isnan(constant[c]) ? sigmoid(dot(weights.row(c), x) + bias[c]) : constant[c];
  }
  return out;
}

double logreg_loss(std::span<const double> w, double b, const DenseMatrix& x,
                   std::span<const std::uint8_t> targets, double l2, std::span<double> dw,
                   double* db) {
  const std::size_t n = x.rows();
  if (targets.size() != n) throw ShapeError("logreg_loss: target count does not match rows");
  const bool want_grad = !dw.empty();
  if (want_grad) {
    std::fill(dw.begin(), dw.end(), 0.0);
    *db = 0.0;
  }
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = dot(w, x.row(i)) + b;
    // BCE with logits: softplus(z) - y·z
    loss += softplus(z) - (targets[i] ? z : 0.0);
    if (want_grad) {
      const double g = scale * (sigmoid(z) - static_cast<double>(targets[i]));
      auto row = x.row(i);
      for (std::size_t j = 0; j < w.size(); ++j) dw[j] += g * row[j];
      *db += g;
    }
  }
  loss *= scale;
  loss += 0.5 * l2 * dot(w, w);
  if (want_grad) {
    for (std::size_t j = 0; j < w.size(); ++j) dw[j] += l2 * w[j];
  }
  return loss;
}

OvrModel train_logreg_ovr(const DenseMatrix& features,
                          std::span<const std::vector<std::uint32_t>> labels,
                          std::size_t label_count, const LogRegConfig& config) {
  if (features.rows() == 0) throw std::invalid_argument("train_logreg_ovr: empty training set");
  if (labels.size() != features.rows()) {
    throw ShapeError("train_logreg_ovr: " + std::to_string(labels.size()) + " label sets for " +
                     std::to_string(features.rows()) + " feature rows");
  }
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  OvrModel model{DenseMatrix(label_count, d), std::vector<double>(label_count, 0.0),
                 std::vector<double>(label_count, std::numeric_limits<double>::quiet_NaN())};
  std::vector<std::uint8_t> targets(n);
  std::vector<double> dw(d);
  for (std::size_t c = 0; c < label_count; ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      targets[i] = std::binary_search(labels[i].begin(), labels[i].end(),
                                      static_cast<std::uint32_t>(c));
      positives += targets[i];
    }
    if (positives == 0 || positives == n) {
      model.constant[c] = positives == n ? 1.0 : 0.0;
      continue;
    }
    auto w = model.weights.row(c);
    double& b = model.bias[c];
    double db = 0.0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      logreg_loss(w, b, features, targets, config.l2, dw, &db);
      for (std::size_t j = 0; j < d; ++j) w[j] -= config.learning_rate * dw[j];
      b -= config.learning_rate * db;
    }
  }
  return model;
}

std::vector<std::uint32_t> predict_topk(std::span<const double> scores, std::size_t k) {
  if (k < 1) throw std::invalid_argument("predict_topk: k must be >= 1");
  if (k > scores.size()) {
    throw std::invalid_argument("predict_topk: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(scores.size()) + " labels");
  }
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

F1Scores f1_scores(std::span<const std::vector<std::uint32_t>> predicted,
                   std::span<const std::vector<std::uint32_t>> truth, std::size_t label_count) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("f1_scores: predicted and truth cover different node counts");
  }
  std::vector<std::size_t> tp(label_count), fp(label_count), fn(label_count);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (auto label : predicted[i]) {
      const bool hit = std::find(truth[i].begin(), truth[i].end(), label) != truth[i].end();
      ++(hit ? tp : fp).at(label);
    }
    for (auto label : truth[i]) {
      if (std::find(predicted[i].begin(), predicted[i].end(), label) == predicted[i].end()) {
        ++fn.at(label);
      }
    }
  }
  auto f1 = [](std::size_t t, std::size_t p, std::size_t n) {
    const std::size_t denom = 2 * t + p + n;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(t) / static_cast<double>(denom);
  };
  F1Scores out;
  const std::size_t all_tp = std::accumulate(tp.begin(), tp.end(), std::size_t{0});
  const std::size_t all_fp = std::accumulate(fp.begin(), fp.end(), std::size_t{0});
  const std::size_t all_fn = std::accumulate(fn.begin(), fn.end(), std::size_t{0});
  out.micro = f1(all_tp, all_fp, all_fn);
  if (label_count > 0) {
    double total = 0.0;
    for (std::size_t c = 0; c < label_count; ++c) total += f1(tp[c], fp[c], fn[c]);
    out.macro = total / static_cast<double>(label_count);
  }
  return out;
}

ClassificationReport run_classification_eval(const DenseMatrix& features, const LabelTable& labels,
                                             double train_fraction, std::size_t runs,
                                             std::uint64_t seed, const LogRegConfig& config) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("run_classification_eval: train fraction must lie in (0, 1)");
  }
  if (runs == 0) throw std::invalid_argument("run_classification_eval: runs must be >= 1");
  if (labels.node_count() > features.rows()) {
    throw ShapeError("run_classification_eval: labels cover " +
                     std::to_string(labels.node_count()) + " nodes but features have " +
                     std::to_string(features.rows()) + " rows");
  }
  std::vector<std::size_t> labeled;
  for (std::size_t v = 0; v < labels.node_count(); ++v) {
    if (!labels.labels[v].empty()) labeled.push_back(v);
  }
  const auto train_count = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(labeled.size())));
  if (train_count == 0 || train_count >= labeled.size()) {
    throw std::invalid_argument("run_classification_eval: " + std::to_string(labeled.size()) +
                                " labeled nodes give an empty train or test split");
  }

  ClassificationReport report;
  report.runs = runs;
  for (std::size_t run = 0; run < runs; ++run) {
    auto order = labeled;
    Rng rng(derive_seed(seed, run));
    rng.shuffle(order.begin(), order.end());
    DenseMatrix x_train(train_count, features.cols());
    std::vector<std::vector<std::uint32_t>> y_train(train_count);
    for (std::size_t i = 0; i < train_count; ++i) {
      std::copy(features.row(order[i]).begin(), features.row(order[i]).end(),
                x_train.row(i).begin());
      y_train[i] = labels.labels[order[i]];
    }
    const auto model = train_logreg_ovr(x_train, y_train, labels.label_count, config);
    std::vector<std::vector<std::uint32_t>> predicted, truth;
    for (std::size_t i = train_count; i < order.size(); ++i) {
      const auto& true_set = labels.labels[order[i]];
      predicted.push_back(predict_topk(model.scores(features.row(order[i])), true_set.size()));
      truth.push_back(true_set);
    }
    const auto f1 = f1_scores(predicted, truth, labels.label_count);
    report.micro_f1 += f1.micro;
    report.macro_f1 += f1.macro;
  }
  report.micro_f1 /= static_cast<double>(runs);
  report.macro_f1 /= static_cast<double>(runs);
  return report;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double auc_score(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) {
    throw std::invalid_argument("auc_score: positive and negative lists must be nonempty");
  }
  // Mann-Whitney U with midranks for ties.
  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> all;
  for (double s : positive) all.push_back({s, true});
  for (double s : negative) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < all.size() && all[j].score == all[i].score) pos_in_group += all[j++].positive;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    positive_rank_sum += midrank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double np = static_cast<double>(positive.size());
  const double nn = static_cast<double>(negative.size());
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double run_linkpred_eval(const DenseMatrix& embeddings, const EdgeSplit& split) {
  auto score = [&](const std::vector<NodePair>& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
      if (u >= embeddings.rows() || v >= embeddings.rows()) {
        throw std::out_of_range("run_linkpred_eval: pair (" + std::to_string(u) + "," +
                                std::to_string(v) + ") beyond " +
                                std::to_string(embeddings.rows()) + " embedding rows");
      }
      out.push_back(cosine_similarity(embeddings.row(u), embeddings.row(v)));
    }
    return out;
  };
  return auc_score(score(split.positives), score(split.negatives));
}

MemoryCost memory_report(const StorageLayout& layout, const MemoryModel& mm) {
  return std::visit(
      [&](const auto& l) -> MemoryCost {
        using T = std::decay_t<decltype(l)>;
        std::uint64_t floats = 0, ints = 0;
        if constexpr (std::is_same_v<T, OneHotLayout>) {
          floats = l.nodes * l.dim;
          ints = l.nodes;
        } else if constexpr (std::is_same_v<T, MultiHotLayout>) {
          floats = l.s * l.dim;
          ints = l.nodes * l.t;
        } else {
          floats = l.k * l.d_blocks * l.dim;
          ints = l.nodes * l.d_blocks;
        }
        return {floats + ints, floats * mm.float_bytes + ints * mm.int_bytes};
      },
      layout);
}

StorageLayout layout_of(const Codebook& cb) {
  if (cb.layout.flavor == CodeFlavor::kKd) {
    return KdLayout{cb.layout.block_size, cb.layout.selections, cb.dim(), cb.node_count()};
  }
  return MultiHotLayout{cb.layout.basis_count, cb.layout.selections, cb.dim(), cb.node_count()};
}

namespace {

// floor(numerator·100/denominator + 1/2), exactly.
std::uint64_t hundredths_half_up(std::uint64_t numerator, std::uint64_t denominator) {
  using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((u128{numerator} * 200 + denominator) / (u128{denominator} * 2));
}

constexpr std::uint64_t kMillion = 1'000'000;
constexpr std::uint64_t kMegabyte = std::uint64_t{1} << 20;

}  // namespace

std::string format_ratio_2dp(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) throw std::invalid_argument("format_ratio_2dp: zero denominator");
  const std::uint64_t h = hundredths_half_up(numerator, denominator);
  const std::uint64_t frac = h % 100;
  return std::to_string(h / 100) + (frac < 10 ? ".0" : ".") + std::to_string(frac);
}

std::string format_million(std::uint64_t count) { return format_ratio_2dp(count, kMillion); }
std::string format_megabytes(std::uint64_t bytes) { return format_ratio_2dp(bytes, kMegabyte); }

CompressionRatios compression_ratios(const MemoryCost& original, const MemoryCost& compressed) {
  CompressionRatios r;
  r.params = static_cast<double>(original.params) / static_cast<double>(compressed.params);
  r.bytes = static_cast<double>(original.bytes) / static_cast<double>(compressed.bytes);
  // NaN when the compressed size displays as 0.00.
  auto displayed = [](std::uint64_t a, std::uint64_t b, std::uint64_t unit) {
    const std::uint64_t denom = hundredths_half_up(b, unit);
    if (denom == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(hundredths_half_up(a, unit)) / static_cast<double>(denom);
  };
  r.params_display = displayed(original.params, compressed.params, kMillion);
  r.bytes_display = displayed(original.bytes, compressed.bytes, kMegabyte);
  return r;
}

std::vector<std::size_t> basis_utilization(const Codebook& cb) {
  std::vector<std::size_t> counts(cb.layout.basis_count, 0);
  for (auto code : cb.indexes) ++counts.at(code);
  return counts;
}

namespace {

std::string times(double v) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v << "x";
  return os.str();
}

std::string fixed(double v, int precision = 4) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

}  // namespace

std::string EvalReport::to_text() const {
  std::ostringstream os;
  if (has_classification) {
    os << "classification (" << classification.runs << " runs)\n"
       << "  micro-F1  " << fixed(classification.micro_f1) << "\n"
       << "  macro-F1  " << fixed(classification.macro_f1) << "\n";
  }
  if (has_linkpred) os << "link prediction\n  AUC       " << fixed(auc) << "\n";
  os << "memory (float 16 B, int 12 B unless overridden)\n"
     << "  one-hot     " << format_million(original.params) << " M params  "
     << format_megabytes(original.bytes) << " MB\n";
  if (has_codebook) {
    os << "  codebook    " << format_million(compressed.params) << " M params  "
       << format_megabytes(compressed.bytes) << " MB\n"
       << "  ratio       params " << times(ratios.params) << " (table convention "
       << times(ratios.params_display) << "), bytes " << times(ratios.bytes)
       << " (table convention " << times(ratios.bytes_display) << ")\n";
    const auto unused = static_cast<std::size_t>(
        std::count(utilization.begin(), utilization.end(), std::size_t{0}));
    os << "  basis usage " << utilization.size() - unused << "/" << utilization.size()
       << " vectors used\n";
  }
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "metric,value\n";
  if (has_classification) {
    os << "micro_f1," << classification.micro_f1 << "\n"
       << "macro_f1," << classification.macro_f1 << "\n"
       << "classification_runs," << classification.runs << "\n";
  }
  if (has_linkpred) os << "auc," << auc << "\n";
  os << "one_hot_params," << original.params << "\n"
     << "one_hot_bytes," << original.bytes << "\n"
     << "one_hot_mb," << format_megabytes(original.bytes) << "\n";
  if (has_codebook) {
    os << "compressed_params," << compressed.params << "\n"
       << "compressed_bytes," << compressed.bytes << "\n"
       << "compressed_mb," << format_megabytes(compressed.bytes) << "\n"
       << "compression_ratio_params," << ratios.params << "\n"
       << "compression_ratio_bytes," << ratios.bytes << "\n"
       << "compression_ratio_params_table," << ratios.params_display << "\n"
       << "compression_ratio_bytes_table," << ratios.bytes_display << "\n";
    for (std::size_t k = 0; k < utilization.size(); ++k) {
      os << "basis_count_" << k << "," << utilization[k] << "\n";
    }
  }
  return os.str();
}

}  // namespace mcne
