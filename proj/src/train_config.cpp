#include "mcne/train_config.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mcne {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("TrainConfig: " + message);
}

}  // namespace

void TrainConfig::validate() const {
  layout.validate();
  require(encoder_layers >= 1, "encoder_layers must be >= 1");
  require(gcn_layers >= 1, "gcn_layers must be >= 1");
  require(gcn_hidden >= 1, "gcn_hidden must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(beta >= 0.0, "beta must be >= 0");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0,
          "validation_fraction must lie in [0, 1)");
  require(tau.initial > 0.0 && tau.minimum > 0.0 && tau.minimum <= tau.initial,
          "tau schedule needs 0 < tau_min <= tau_init");
  require(tau.step_epochs >= 1, "tau step must be >= 1 epoch");
}

std::size_t TrainConfig::latent_dim() const {
  return std::max<std::size_t>(1, layout.basis_count / 2);
}

}  // namespace mcne
