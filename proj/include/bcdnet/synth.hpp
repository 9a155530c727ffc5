#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bcdnet/rng.hpp"
#include "bcdnet/tensor.hpp"

namespace bcdnet::data {

// Two-class stand-in for histopathology patches: class 0 is smooth blobs,
// class 1 is fine oriented stripes, both in a stained-tissue palette.
inline const std::vector<std::string> kSyntheticClasses{"class0_blob", "class1_stripe"};
inline constexpr std::size_t kSyntheticSize = 50;

Tensor<float> synthetic_image(std::size_t label, Rng& rng, std::size_t size = kSyntheticSize);

// Writes out_dir/<class>/img_NNNN.png, n_per_class per class. Byte-identical
// for a fixed seed. Returns the number of files written.
std::size_t write_synthetic_corpus(const std::filesystem::path& out_dir, std::size_t n_per_class,
                                   std::uint64_t seed, std::size_t size = kSyntheticSize);

}  // namespace bcdnet::data
