#include "mcne/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcne/core_math.hpp"
#include "mcne/random.hpp"

namespace mcne {

double sgns_pair_loss(std::span<const double> v, std::span<const double> u_context,
                      std::span<const std::span<const double>> u_negatives, std::span<double> dv,
                      std::span<double> du_context,
                      std::span<const std::span<double>> du_negatives) {
  const bool want_grad = !dv.empty();
  // -ln σ(z) = softplus(-z); d/dz = -σ(-z)
  const double z_pos = dot(u_context, v);
  double loss = softplus(-z_pos);
  if (want_grad) {
    const double g = -sigmoid(-z_pos);
    for (std::size_t j = 0; j < v.size(); ++j) {
      dv[j] += g * u_context[j];
      du_context[j] += g * v[j];
    }
  }
  for (std::size_t n = 0; n < u_negatives.size(); ++n) {
    // -ln σ(-z) = softplus(z); d/dz = σ(z)
    const double z = dot(u_negatives[n], v);
    loss += softplus(z);
    if (want_grad) {
      const double g = sigmoid(z);
      for (std::size_t j = 0; j < v.size(); ++j) {
        dv[j] += g * u_negatives[n][j];
        du_negatives[n][j] += g * v[j];
      }
    }
  }
  return loss;
}

double sgns_loss(const SgnsModel& model, std::span<const SgnsSample> samples, SgnsModel* grad) {
  if (samples.empty()) return 0.0;
  const std::size_t d = model.input.cols();
  const double scale = 1.0 / static_cast<double>(samples.size());
  std::vector<double> dv(d), du(d);
  std::vector<std::vector<double>> du_neg;
  double total = 0.0;
  for (const auto& s : samples) {
    std::vector<std::span<const double>> negs;
    for (NodeId n : s.negatives) negs.push_back(model.output.row(n));
    if (grad == nullptr) {
      total += sgns_pair_loss(model.input.row(s.center), model.output.row(s.context), negs);
      continue;
    }
    std::fill(dv.begin(), dv.end(), 0.0);
    std::fill(du.begin(), du.end(), 0.0);
    du_neg.assign(s.negatives.size(), std::vector<double>(d, 0.0));
    std::vector<std::span<double>> du_neg_spans(du_neg.begin(), du_neg.end());
    total += sgns_pair_loss(model.input.row(s.center), model.output.row(s.context), negs, dv, du,
                            du_neg_spans);
    auto gin = grad->input.row(s.center);
    auto gctx = grad->output.row(s.context);
    for (std::size_t j = 0; j < d; ++j) {
      gin[j] += scale * dv[j];
      gctx[j] += scale * du[j];
    }
    for (std::size_t n = 0; n < s.negatives.size(); ++n) {
      auto gneg = grad->output.row(s.negatives[n]);
      for (std::size_t j = 0; j < d; ++j) gneg[j] += scale * du_neg[n][j];
    }
  }
  return total * scale;
}

SgnsModel init_sgns(std::size_t node_count, std::size_t dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5EED));
  SgnsModel model{DenseMatrix(node_count, dim), DenseMatrix(node_count, dim)};
  const double half = 0.5 / static_cast<double>(dim);
  for (double& x : model.input.data()) x = rng.uniform(-half, half);
  return model;
}

EmbeddingTable train_sgns(const Graph& g, const SgnsConfig& config) {
  if (config.dim < 2) throw std::invalid_argument("train_sgns: dim must be >= 2");
  if (config.window < 1) throw std::invalid_argument("train_sgns: window must be >= 1");
  SgnsModel model = init_sgns(g.node_count(), config.dim, config.seed);
  if (config.epochs == 0) return {std::move(model.input)};
  if (g.edge_count() == 0) throw std::invalid_argument("train_sgns: graph has no edges");

  auto walks = random_walks(g, config.walks_per_node, config.walk_length,
                            derive_seed(config.seed, 0xA11C));
  std::size_t pairs_per_epoch = 0;
  for (const auto& walk : walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      const std::size_t lo = i >= config.window ? i - config.window : 0;
      const std::size_t hi = std::min(walk.size() - 1, i + config.window);
      pairs_per_epoch += hi - lo;
    }
  }
  const double total_pairs = static_cast<double>(pairs_per_epoch * config.epochs);
  const double min_lr = config.learning_rate * 1e-4;

  Rng rng(derive_seed(config.seed, 0x7A1E));
  const std::size_t n = g.node_count();
  const std::size_t d = config.dim;
  std::vector<double> dv(d), du(d), dneg(d);
  std::size_t seen = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(walks.begin(), walks.end());
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i) {
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + config.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const double lr = std::max(
              min_lr, config.learning_rate * (1.0 - static_cast<double>(seen) / total_pairs));
          ++seen;
          const NodeId center = walk[i];
          const NodeId context = walk[j];
          auto v = model.input.row(center);
          std::fill(dv.begin(), dv.end(), 0.0);

          // Positive pair, then negatives; output rows are updated immediately.
          auto update_output = [&](NodeId target, double label) {
            auto u = model.output.row(target);
            const double gz = sigmoid(dot(u, v)) - label;  // d loss / dz
            for (std::size_t k = 0; k < d; ++k) {
              dv[k] += gz * u[k];
              u[k] -= lr * gz * v[k];
            }
          };
          update_output(context, 1.0);
          for (std::size_t k = 0; k < config.negatives; ++k) {
            const auto neg = static_cast<NodeId>(rng.below(n));
            if (neg == context) continue;
            update_output(neg, 0.0);
          }
          for (std::size_t k = 0; k < d; ++k) v[k] -= lr * dv[k];
        }
      }
    }
  }
  return {std::move(model.input)};
}

}  // namespace mcne
