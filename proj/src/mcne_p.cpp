#include "mcne/mcne_p.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mcne/core_math.hpp"

namespace mcne {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kSplitStream = 0x5B17;
constexpr std::uint64_t kShuffleStream = 0x5F1E;
constexpr std::uint64_t kNoiseStream = 0x9A55;
constexpr std::uint64_t kValidationStream = 0xFA11;

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

struct EncoderTrace {
  std::vector<DenseMatrix> activations;  // activations[0] = input, activations[k] = tanh layer k
};

EncoderTrace encoder_trace(const DenseMatrix& x, const McnePModel& model) {
  EncoderTrace trace;
  trace.activations.push_back(x);
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    trace.activations.push_back(
        activation(affine(trace.activations.back(), model.weights[k], model.biases[k]),
                   Activation::kTanh));
  }
  return trace;
}

}  // namespace

std::vector<DenseMatrix*> McnePModel::parameters() {
  std::vector<DenseMatrix*> out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.push_back(&weights[k]);
    out.push_back(&biases[k]);
  }
  out.push_back(&compressor.w_c);
  out.push_back(&compressor.b_c);
  out.push_back(&compressor.basis);
  return out;
}

std::vector<const DenseMatrix*> McnePModel::parameters() const {
  auto mutable_params = const_cast<McnePModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::size_t> encoder_widths(std::size_t input_dim, const TrainConfig& config) {
  const std::size_t layers = config.encoder_layers;
  const std::size_t latent = config.latent_dim();
  std::vector<std::size_t> widths{input_dim};
  for (std::size_t k = 1; k < layers; ++k) {
    if (config.hidden_width != 0) {
      widths.push_back(config.hidden_width);
    } else if (layers == 2) {
      widths.push_back(latent);
    } else {
      // Geometric interpolation between d and d_l.
      const double ratio = static_cast<double>(latent) / static_cast<double>(input_dim);
      const double w = static_cast<double>(input_dim) *
                       std::pow(ratio, static_cast<double>(k) / static_cast<double>(layers));
      widths.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w))));
    }
  }
  widths.push_back(latent);
  return widths;
}

McnePModel init_mcne_p(std::size_t input_dim, const TrainConfig& config, Rng& rng) {
  config.validate();
  const auto widths = encoder_widths(input_dim, config);
  McnePModel model;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    model.weights.push_back(glorot_uniform(widths[k], widths[k + 1], rng));
    model.biases.emplace_back(1, widths[k + 1]);
  }
  model.compressor = init_compressor(config.layout, widths.back(), input_dim, rng);
  model.compressor.tau = config.tau.initial;
  return model;
}

DenseMatrix encode_batch(const DenseMatrix& x, const McnePModel& model) {
  return std::move(encoder_trace(x, model).activations.back());
}

std::vector<double> encode(std::span<const double> x, const McnePModel& model) {
  const auto latent = encode_batch(DenseMatrix::row_vector(x), model);
  return {latent.data().begin(), latent.data().end()};
}

McnePForward forward(std::span<const double> x, const McnePModel& model, double tau, Rng& rng) {
  const auto& layout = model.compressor.layout;
  return forward(x, model, tau, sample_standard_gumbel(layout.selections, layout.basis_count, rng));
}

McnePForward forward(std::span<const double> x, const McnePModel& model, double tau,
                     const DenseMatrix& noise) {
  const auto latent = encode(x, model);
  const auto y = compute_logits(latent, model.compressor);
  McnePForward out{{}, soft_assignment(y, noise, tau, model.compressor.layout)};
  std::vector<std::vector<double>> selected;
  for (std::size_t i = 0; i < out.soft.h.rows(); ++i) {
    selected.push_back(select_basis(out.soft.h.row(i), model.compressor.basis));
  }
  out.reconstruction = compose(selected);
  return out;
}

double mcne_p_loss(const McnePModel& model, const DenseMatrix& x, const DenseMatrix& noise,
                   double tau, std::vector<DenseMatrix>* grads) {
  const auto trace = encoder_trace(x, model);
  const DenseMatrix& latent = trace.activations.back();
  const auto fwd = compressor_forward(model.compressor, latent, noise, tau);
  const double loss = mse_loss(fwd.output, x);
  if (grads == nullptr) return loss;

  const auto comp = compressor_backward(model.compressor, latent, fwd, mse_loss_grad(fwd.output, x),
                                        tau);
  const std::size_t layers = model.weights.size();
  std::vector<DenseMatrix> dw(layers), db(layers);
  DenseMatrix upstream = comp.d_latent;
  for (std::size_t k = layers; k-- > 0;) {
    const DenseMatrix& out = trace.activations[k + 1];
    DenseMatrix dz(out.rows(), out.cols());
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dz.data()[i] = upstream.data()[i] * (1.0 - out.data()[i] * out.data()[i]);
    }
    auto ag = affine_backward(trace.activations[k], model.weights[k], dz);
    dw[k] = std::move(ag.dw);
    db[k] = std::move(ag.db);
    upstream = std::move(ag.dx);
  }
  grads->clear();
  for (std::size_t k = 0; k < layers; ++k) {
    grads->push_back(std::move(dw[k]));
    grads->push_back(std::move(db[k]));
  }
  grads->push_back(comp.d_w);
  grads->push_back(comp.d_b);
  grads->push_back(comp.d_basis);
  return loss;
}

Codebook export_codebook(const McnePModel& model, const EmbeddingTable& table) {
  Codebook cb;
  cb.layout = model.compressor.layout;
  cb.basis = model.compressor.basis;
  cb.indexes = compressor_codes(model.compressor, encode_batch(table.matrix, model));
  return cb;
}

double validation_loss(const McnePModel& model, const EmbeddingTable& table,
                       std::span<const std::size_t> rows, double tau, std::uint64_t seed) {
  if (rows.empty()) return 0.0;
  // Same noise every call so that epochs are compared on common random numbers.
  Rng rng(derive_seed(seed, kValidationStream));
  const auto x = gather_rows(table.matrix, rows);
  const auto noise = sample_standard_gumbel(x.rows(), model.compressor.layout.logit_width(), rng);
  return mcne_p_loss(model, x, noise, tau);
}

McnePResult train_mcne_p(const EmbeddingTable& table, const TrainConfig& config) {
  config.validate();
  if (table.node_count() == 0 || table.dim() == 0) {
    throw std::invalid_argument("train_mcne_p: embedding table is empty");
  }
  if (config.dim != 0 && config.dim != table.dim()) {
    throw std::invalid_argument("train_mcne_p: config dim " + std::to_string(config.dim) +
                                " does not match embedding dim " + std::to_string(table.dim()));
  }
  const std::size_t n = table.node_count();

  Rng init_rng(derive_seed(config.seed, kInitStream));
  McnePResult result;
  result.model = init_mcne_p(table.dim(), config, init_rng);

  // Hold out ⌈fraction·n⌉ rows (at least one, never all) for checkpoint selection.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config.seed, kSplitStream));
  split_rng.shuffle(order.begin(), order.end());
  std::size_t val_count = 0;
  if (config.validation_fraction > 0.0 && n > 1) {
    val_count = static_cast<std::size_t>(
        std::ceil(config.validation_fraction * static_cast<double>(n)));
    val_count = std::clamp<std::size_t>(val_count, 1, n - 1);
  }
  result.validation_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
  std::sort(result.validation_rows.begin(), result.validation_rows.end());
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
  // With no held-out rows, checkpoints are chosen on the training rows.
  const std::span<const std::size_t> checkpoint_rows =
      val_count > 0 ? std::span<const std::size_t>(result.validation_rows)
                    : std::span<const std::size_t>(train_rows);

  result.initial_validation_loss =
      validation_loss(result.model, table, checkpoint_rows, config.tau.initial, config.seed);
  result.best_validation_loss = result.initial_validation_loss;

  McnePModel model = result.model;
  AdamOptimizer adam(AdamConfig{.learning_rate = config.learning_rate});
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng noise_rng(derive_seed(config.seed, kNoiseStream));
  std::vector<DenseMatrix> grads;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double tau = anneal_tau(config.tau, epoch);
    model.compressor.tau = tau;
    shuffle_rng.shuffle(train_rows.begin(), train_rows.end());
    double weighted = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const std::size_t stop = std::min(train_rows.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(train_rows.data() + start, stop - start);
      const auto x = gather_rows(table.matrix, batch);
      const auto noise = sample_standard_gumbel(x.rows(), config.layout.logit_width(), noise_rng);
      const double loss = mcne_p_loss(model, x, noise, tau, &grads);
      weighted += loss * static_cast<double>(batch.size());
      adam.step(model.parameters(), grads);
    }
    const double val = validation_loss(model, table, checkpoint_rows, tau, config.seed);
    result.log.push_back({epoch, weighted / static_cast<double>(train_rows.size()), val, tau});
    if (result.log.size() == 1 || val < result.best_validation_loss) {
      result.best_validation_loss = val;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  result.codebook = export_codebook(result.model, table);
  return result;
}

}  // namespace mcne
