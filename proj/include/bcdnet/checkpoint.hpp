#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcdnet/model.hpp"
#include "bcdnet/optim.hpp"

namespace bcdnet {

// Binary checkpoint, little-endian:
//   "BCDN" | u32 version | u32 header length | header JSON (UTF-8)
//   repeated { u16 name length | name | u8 rank | u32 dims[rank] | f32 data }
//   u32 CRC-32 of every preceding byte
// The header JSON holds the model config, the seed, optional optimizer
// scalars and caller metadata.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  nlohmann::json meta = nlohmann::json::object();
  // Parameters and buffers by name, in file order.
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  // Adam moments by parameter name (empty when no optimizer was saved).
  std::map<std::string, Tensor<float>> adam_m;
  std::map<std::string, Tensor<float>> adam_v;
  std::size_t adam_steps = 0;
  bool has_optimizer = false;
};

std::vector<std::uint8_t> encode_checkpoint(Model<float>& model, const Adam<float>* optimizer,
                                            const nlohmann::json& meta);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, Model<float>& model,
                     const Adam<float>* optimizer = nullptr,
                     const nlohmann::json& meta = nlohmann::json::object());
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Builds a model from the stored config and copies every tensor in.
std::unique_ptr<Model<float>> load_model(const Checkpoint& ckpt);
std::unique_ptr<Model<float>> load_model(const std::filesystem::path& path);

// Copies tensors into an existing model; BadConfig if its config differs.
void load_into(Model<float>& model, const Checkpoint& ckpt);
void load_optimizer(Adam<float>& optimizer, const Checkpoint& ckpt);

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

}  // namespace bcdnet
