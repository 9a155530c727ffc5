#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcdnet/nn.hpp"

namespace bcdnet {

// Architecture of one network instance. Each entry of block_channels is a
// conv -> batchnorm -> relu -> maxpool block; the head is
// flatten -> linear(fc_hidden) -> relu -> dropout -> linear(num_classes).
struct ModelConfig {
  std::size_t in_channels = 3;
  std::size_t input_hw = 224;
  std::vector<std::size_t> block_channels{32, 64, 128, 256, 256};
  std::size_t kernel = 3;
  std::size_t conv_stride = 1;
  std::size_t conv_pad = 1;
  std::size_t pool_window = 2;
  std::size_t pool_stride = 2;
  std::size_t fc_hidden = 512;
  double dropout_rate = 0.5;
  std::size_t num_classes = 2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  // Small two-block network on 64x64 inputs for desk-scale training.
  static ModelConfig micro();

  // Throws BadConfig unless every conv/pool stage divides evenly.
  void validate() const;

  // Spatial extent after each block.
  std::vector<std::size_t> block_extents() const;
  std::size_t flatten_features() const;

  // Closed-form count of trainable scalars.
  std::size_t parameter_count() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws BadConfig naming the first key of j not listed in allowed.
void reject_unknown_keys(const nlohmann::json& j, std::span<const char* const> allowed,
                         const std::string& where);

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

template <typename T>
class Model {
 public:
  // Deterministic initialization from `seed`.
  Model(const ModelConfig& config, std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  void set_mode(nn::Mode mode);
  nn::Mode mode() const { return mode_; }

  // Records the forward pass; returns logits [N, num_classes].
  Var<T> forward(Var<T> x);
  // Convenience: forward on a throwaway tape.
  Tensor<T> forward(const Tensor<T>& x);

  // Input shapes of each layer's output for a given batch size, block by
  // block (the shape after each maxpool), then the logits.
  std::vector<Shape> shape_trace(std::size_t batch);

  std::vector<Parameter<T>*> parameters();
  std::vector<nn::NamedBuffer<T>> buffers();
  std::size_t parameter_count();

  void reseed_dropout(std::uint64_t seed);

  std::string describe();

  const std::vector<std::unique_ptr<nn::Module<T>>>& layers() const { return layers_; }

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  nn::Mode mode_ = nn::Mode::Train;
  std::vector<std::unique_ptr<nn::Module<T>>> layers_;
  std::vector<std::size_t> block_ends_;
  nn::Dropout<T>* dropout_ = nullptr;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace bcdnet
