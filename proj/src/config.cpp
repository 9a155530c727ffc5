#include "bcdnet/config.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bcdnet {

TrainConfig TrainConfig::reference() { return TrainConfig{}; }

TrainConfig TrainConfig::micro() {
  TrainConfig c;
  c.model = ModelConfig::micro();
  c.augment.target_hw = c.model.input_hw;
  c.batch_size = 8;
  return c;
}

void TrainConfig::validate() const {
  model.validate();
  augment.validate();
  optim.validate();
  scheduler().validate();
  if (epochs < 1) throw Error(ErrorKind::BadConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::BadConfig, "batch_size must be >= 1");
  if (augment.target_hw != model.input_hw) {
    throw Error(ErrorKind::BadConfig, "augment.target_hw " + std::to_string(augment.target_hw) +
                                          " differs from model.input_hw " +
                                          std::to_string(model.input_hw));
  }
}

nlohmann::json augment_to_json(const data::AugmentPolicy& p) {
  return {{"mean", p.mean},          {"std", p.std},
          {"hflip_prob", p.hflip_prob}, {"vflip_prob", p.vflip_prob},
          {"rotation_deg", p.rotation_deg}, {"target_hw", p.target_hw}};
}

data::AugmentPolicy augment_from_json(const nlohmann::json& j, data::AugmentPolicy p) {
  static constexpr std::array kKeys{"mean",       "std",          "hflip_prob",
                                    "vflip_prob", "rotation_deg", "target_hw"};
  reject_unknown_keys(j, kKeys, "augment");
  if (j.contains("mean")) j.at("mean").get_to(p.mean);
  if (j.contains("std")) j.at("std").get_to(p.std);
  if (j.contains("hflip_prob")) j.at("hflip_prob").get_to(p.hflip_prob);
  if (j.contains("vflip_prob")) j.at("vflip_prob").get_to(p.vflip_prob);
  if (j.contains("rotation_deg")) j.at("rotation_deg").get_to(p.rotation_deg);
  if (j.contains("target_hw")) j.at("target_hw").get_to(p.target_hw);
  return p;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{
      {"model", c.model},
      {"augment", augment_to_json(c.augment)},
      {"optim", {{"lr", c.optim.lr}, {"beta1", c.optim.beta1}, {"beta2", c.optim.beta2},
                 {"eps", c.optim.eps}}},
      {"scheduler", {{"step_size", c.step_size}, {"gamma", c.gamma}}},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"deterministic", c.deterministic}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::BadConfig, "config must be a JSON object");
    static constexpr std::array kKeys{"preset", "model",      "augment", "optim",        "scheduler",
                                      "epochs", "batch_size", "seed",    "deterministic"};
    static constexpr std::array kOptimKeys{"lr", "beta1", "beta2", "eps"};
    static constexpr std::array kSchedulerKeys{"step_size", "gamma"};
    reject_unknown_keys(j, kKeys, "config");
    if (j.contains("optim")) reject_unknown_keys(j.at("optim"), kOptimKeys, "optim");
    if (j.contains("scheduler")) reject_unknown_keys(j.at("scheduler"), kSchedulerKeys, "scheduler");
    const std::string preset = j.value("preset", std::string("reference"));
    TrainConfig c;
    if (preset == "micro") {
      c = TrainConfig::micro();
    } else if (preset != "reference") {
      throw Error(ErrorKind::BadConfig, "unknown preset '" + preset + "'");
    }
    if (j.contains("model")) {
      from_json(j.at("model"), c.model);
      c.augment.target_hw = c.model.input_hw;
    }
    if (j.contains("augment")) c.augment = augment_from_json(j.at("augment"), c.augment);
    if (j.contains("optim")) {
      const auto& o = j.at("optim");
      c.optim.lr = o.value("lr", c.optim.lr);
      c.optim.beta1 = o.value("beta1", c.optim.beta1);
      c.optim.beta2 = o.value("beta2", c.optim.beta2);
      c.optim.eps = o.value("eps", c.optim.eps);
    }
    if (j.contains("scheduler")) {
      const auto& s = j.at("scheduler");
      c.step_size = s.value("step_size", c.step_size);
      c.gamma = s.value("gamma", c.gamma);
    }
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.deterministic = j.value("deterministic", c.deterministic);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed config: ") + e.what());
  }
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  const nlohmann::json j = nlohmann::json::parse(text.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::BadConfig, path.string() + " is not valid JSON");
  return train_config_from_json(j);
}

void apply_env_overrides(TrainConfig& config) {
  const char* seed = std::getenv("BCDNET_SEED");
  if (seed == nullptr || *seed == '\0') return;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(seed, &end, 10);
  if (end == nullptr || *end != '\0') {
    throw Error(ErrorKind::BadConfig, std::string("BCDNET_SEED is not an integer: ") + seed);
  }
  config.seed = value;
}

}  // namespace bcdnet
