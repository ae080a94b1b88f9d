#include "mcne/mcne_t.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "mcne/core_math.hpp"

namespace mcne {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5F1E;
constexpr std::uint64_t kNoiseStream = 0x9A55;
constexpr std::uint64_t kTripletStream = 0x3E7;

struct GcnTrace {
  std::vector<DenseMatrix> propagated;   // Â·G^(k)
  std::vector<DenseMatrix> activations;  // G^(0) .. G^(l)
};

GcnTrace gcn_trace(const McneTModel& model) {
  GcnTrace trace;
  trace.activations.push_back(model.input);
  for (const auto& w : model.gcn_weights) {
    trace.propagated.push_back(sparse_matmul(model.a_hat, trace.activations.back()));
    trace.activations.push_back(activation(matmul(trace.propagated.back(), w), Activation::kTanh));
  }
  return trace;
}

}  // namespace

std::vector<DenseMatrix*> McneTModel::parameters() {
  std::vector<DenseMatrix*> out{&input};
  for (auto& w : gcn_weights) out.push_back(&w);
  out.push_back(&compressor.w_c);
  out.push_back(&compressor.b_c);
  out.push_back(&compressor.basis);
  return out;
}

McneTModel init_mcne_t(const Graph& g, const TrainConfig& config, Rng& rng) {
  config.validate();
  if (config.dim == 0) throw std::invalid_argument("init_mcne_t: dim must be set");
  const std::size_t d0 = config.input_dim == 0 ? config.dim : config.input_dim;
  std::vector<std::size_t> widths{d0};
  for (std::size_t k = 1; k < config.gcn_layers; ++k) widths.push_back(config.gcn_hidden);
  widths.push_back(config.dim);

  McneTModel model;
  model.input = glorot_uniform(g.node_count(), d0, rng);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    model.gcn_weights.push_back(glorot_uniform(widths[k], widths[k + 1], rng));
  }
  model.compressor = init_compressor(config.layout, config.dim, config.dim, rng);
  model.compressor.tau = config.tau.initial;
  model.a_hat = normalize_adjacency(g);
  return model;
}

DenseMatrix gcn_forward(const McneTModel& model) {
  return std::move(gcn_trace(model).activations.back());
}

std::vector<Triplet> sample_triplets(const Graph& g, std::span<const NodeId> anchors, Rng& rng,
                                     TripletStats* stats) {
  std::vector<Triplet> out;
  out.reserve(anchors.size());
  const std::size_t n = g.node_count();
  for (NodeId a : anchors) {
    const auto adj = g.neighbors(a);
    if (adj.empty()) {
      if (stats) ++stats->skipped_isolated;
      continue;
    }
    if (adj.size() + 1 >= n) {
      if (stats) ++stats->skipped_saturated;
      continue;
    }
    Triplet t{a, adj[rng.below(adj.size())], 0};
    do {
      t.negative = static_cast<NodeId>(rng.below(n));
    } while (t.negative == a || g.has_edge(a, t.negative));
    out.push_back(t);
  }
  return out;
}

double loss_topology(std::span<const double> anchor, std::span<const double> positive,
                     std::span<const double> negative, TopologyGrads* grads) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw ShapeError("loss_topology: vector lengths differ");
  }
  const double diff = dot(anchor, positive) - dot(anchor, negative);
  if (grads != nullptr) {
    const double c = -sigmoid(-diff);
    const std::size_t d = anchor.size();
    grads->d_anchor.assign(d, 0.0);
    grads->d_positive.assign(d, 0.0);
    grads->d_negative.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      grads->d_anchor[j] = c * (positive[j] - negative[j]);
      grads->d_positive[j] = c * anchor[j];
      grads->d_negative[j] = -c * anchor[j];
    }
  }
  return softplus(-diff);
}

McneTLoss loss_combined(const McneTModel& model, std::span<const NodeId> anchors,
                        std::span<const Triplet> triplets, const DenseMatrix& noise, double tau,
                        double beta, std::vector<DenseMatrix>* grads) {
  if (beta < 0.0) throw std::invalid_argument("loss_combined: beta must be >= 0");
  const auto trace = gcn_trace(model);
  const DenseMatrix& latent = trace.activations.back();
  const auto fwd = compressor_forward(model.compressor, latent, noise, tau);
  const DenseMatrix& recon = fwd.output;
  const std::size_t d = latent.cols();

  McneTLoss loss;
  DenseMatrix d_recon(recon.rows(), recon.cols());
  DenseMatrix d_latent(latent.rows(), latent.cols());
  TopologyGrads tg;
  if (!triplets.empty()) {
    const double scale = 1.0 / static_cast<double>(triplets.size());
    for (const auto& t : triplets) {
      loss.topology += loss_topology(recon.row(t.anchor), recon.row(t.positive),
                                     recon.row(t.negative), grads ? &tg : nullptr);
      if (grads) {
        for (std::size_t j = 0; j < d; ++j) {
          d_recon(t.anchor, j) += scale * tg.d_anchor[j];
          d_recon(t.positive, j) += scale * tg.d_positive[j];
          d_recon(t.negative, j) += scale * tg.d_negative[j];
        }
      }
    }
    loss.topology *= scale;
  }
  if (!anchors.empty()) {
    const double scale = 1.0 / static_cast<double>(anchors.size());
    for (NodeId a : anchors) {
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = latent(a, j) - recon(a, j);
        loss.reconstruction += diff * diff;
        if (grads) {
          // Both the GCN latent and its reconstruction receive gradient.
          d_latent(a, j) += beta * scale * 2.0 * diff;
          d_recon(a, j) -= beta * scale * 2.0 * diff;
        }
      }
    }
    loss.reconstruction *= scale;
  }
  loss.combined = loss.topology + beta * loss.reconstruction;
  if (grads == nullptr) return loss;

  auto comp = compressor_backward(model.compressor, latent, fwd, d_recon, tau);
  axpy(1.0, comp.d_latent, d_latent);

  const std::size_t layers = model.gcn_weights.size();
  std::vector<DenseMatrix> dw(layers);
  DenseMatrix upstream = std::move(d_latent);
  for (std::size_t k = layers; k-- > 0;) {
    const DenseMatrix& out = trace.activations[k + 1];
    DenseMatrix dz(out.rows(), out.cols());
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dz.data()[i] = upstream.data()[i] * (1.0 - out.data()[i] * out.data()[i]);
    }
    dw[k] = matmul_tn(trace.propagated[k], dz);
    // Â is symmetric, so Âᵀ·(dZ·Wᵀ) = Â·(dZ·Wᵀ).
    upstream = sparse_matmul(model.a_hat, matmul_nt(dz, model.gcn_weights[k]));
  }
  grads->clear();
  grads->push_back(std::move(upstream));
  for (auto& w : dw) grads->push_back(std::move(w));
  grads->push_back(std::move(comp.d_w));
  grads->push_back(std::move(comp.d_b));
  grads->push_back(std::move(comp.d_basis));
  return loss;
}

Codebook export_codebook(const McneTModel& model) {
  Codebook cb;
  cb.layout = model.compressor.layout;
  cb.basis = model.compressor.basis;
  cb.indexes = compressor_codes(model.compressor, gcn_forward(model));
  return cb;
}

DenseMatrix hard_forward(const McneTModel& model) {
  const auto codes = compressor_codes(model.compressor, gcn_forward(model));
  const std::size_t t = model.compressor.layout.selections;
  const DenseMatrix& basis = model.compressor.basis;
  DenseMatrix out(codes.size() / t, basis.cols());
  for (std::size_t v = 0; v < out.rows(); ++v) {
    auto dst = out.row(v);
    for (std::size_t i = 0; i < t; ++i) {
      auto b = basis.row(codes[v * t + i]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += b[j];
    }
  }
  return out;
}

McneTResult train_mcne_t(const Graph& g, const TrainConfig& config) {
  config.validate();
  if (g.edge_count() == 0) throw std::invalid_argument("train_mcne_t: graph has no edges");
  if (config.dim == 0) throw std::invalid_argument("train_mcne_t: dim must be set");

  Rng init_rng(derive_seed(config.seed, kInitStream));
  McneTResult result;
  McneTModel model = init_mcne_t(g, config, init_rng);
  result.model = model;

  std::vector<NodeId> anchors(g.node_count());
  std::iota(anchors.begin(), anchors.end(), NodeId{0});
  AdamOptimizer adam(AdamConfig{.learning_rate = config.learning_rate});
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng noise_rng(derive_seed(config.seed, kNoiseStream));
  Rng triplet_rng(derive_seed(config.seed, kTripletStream));
  std::vector<DenseMatrix> grads;
  double best = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double tau = anneal_tau(config.tau, epoch);
    model.compressor.tau = tau;
    shuffle_rng.shuffle(anchors.begin(), anchors.end());
    McneTEpoch entry{epoch, 0.0, 0.0, 0.0, tau};
    for (std::size_t start = 0; start < anchors.size(); start += config.batch_size) {
      const std::size_t stop = std::min(anchors.size(), start + config.batch_size);
      const std::span<const NodeId> batch(anchors.data() + start, stop - start);
      const auto triplets = sample_triplets(g, batch, triplet_rng, &result.triplet_stats);
      const auto noise =
          sample_standard_gumbel(g.node_count(), config.layout.logit_width(), noise_rng);
      const auto loss = loss_combined(model, batch, triplets, noise, tau, config.beta, &grads);
      const double weight = static_cast<double>(batch.size()) / static_cast<double>(anchors.size());
      entry.topology += weight * loss.topology;
      entry.reconstruction += weight * loss.reconstruction;
      entry.combined += weight * loss.combined;
      adam.step(model.parameters(), grads);
    }
    result.log.push_back(entry);
    if (result.log.size() == 1 || entry.combined < best) {
      best = entry.combined;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  result.codebook = export_codebook(result.model);
  result.embeddings.matrix = reconstruct_all(result.codebook);
  return result;
}

}  // namespace mcne
