#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "bcdnet/data.hpp"
#include "bcdnet/model.hpp"
#include "bcdnet/optim.hpp"

namespace bcdnet {

// Everything one training run needs. Loaded from a JSON file in which every
// key is optional:
//
//   {
//     "preset": "reference" | "micro",
//     "model": { ModelConfig keys },
//     "augment": { "mean": [r,g,b], "std": [r,g,b], "hflip_prob", "vflip_prob",
//                  "rotation_deg", "target_hw" },
//     "optim": { "lr", "beta1", "beta2", "eps" },
//     "scheduler": { "step_size", "gamma" },
//     "epochs", "batch_size", "seed", "deterministic"
//   }
//
// "preset" picks the base that the remaining keys override. augment.target_hw
// defaults to model.input_hw and must equal it.
struct TrainConfig {
  ModelConfig model;
  data::AugmentPolicy augment;
  AdamConfig optim;
  std::size_t step_size = 10;
  double gamma = 0.1;
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  bool deterministic = true;

  static TrainConfig reference();
  static TrainConfig micro();

  StepLR scheduler() const { return StepLR{optim.lr, step_size, gamma, 0}; }
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

nlohmann::json augment_to_json(const data::AugmentPolicy& p);
data::AugmentPolicy augment_from_json(const nlohmann::json& j, data::AugmentPolicy base);

// BCDNET_SEED, when set to an integer, replaces the configured seed.
void apply_env_overrides(TrainConfig& config);

}  // namespace bcdnet
