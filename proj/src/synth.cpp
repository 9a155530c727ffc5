#include "bcdnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "bcdnet/data.hpp"

namespace bcdnet::data {

namespace {

// Eosin-like background and hematoxylin-like foreground.
constexpr float kBackground[3] = {0.92f, 0.72f, 0.84f};
constexpr float kForeground[3] = {0.45f, 0.28f, 0.60f};

}  // namespace

Tensor<float> synthetic_image(std::size_t label, Rng& rng, std::size_t size) {
  const std::size_t plane = size * size;
  std::vector<double> density(plane, 0.0);
  if (label == 0) {
    const int blobs = 3 + static_cast<int>(rng.index(4));
    for (int b = 0; b < blobs; ++b) {
      const double cy = rng.uniform(0.0, static_cast<double>(size));
      const double cx = rng.uniform(0.0, static_cast<double>(size));
      const double radius = rng.uniform(6.0, 14.0);
      const double weight = rng.uniform(0.5, 1.0);
      for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
          const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
          density[i * size + j] += weight * std::exp(-d2 / (2.0 * radius * radius));
        }
      }
    }
  } else {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double period = rng.uniform(3.0, 5.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ky = std::sin(angle), kx = std::cos(angle);
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        const double t = (kx * j + ky * i) * 2.0 * std::numbers::pi / period + phase;
        density[i * size + j] = 0.5 + 0.5 * std::sin(t);
      }
    }
  }

  Tensor<float> image({3, size, size});
  for (std::size_t i = 0; i < plane; ++i) {
    const double d = std::clamp(density[i], 0.0, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
      const double noise = rng.uniform(-0.04, 0.04);
      const double v = kBackground[c] + d * (kForeground[c] - kBackground[c]) + noise;
      image[c * plane + i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return image;
}

std::size_t write_synthetic_corpus(const std::filesystem::path& out_dir, std::size_t n_per_class,
                                   std::uint64_t seed, std::size_t size) {
  std::error_code ec;
  std::size_t written = 0;
  for (std::size_t label = 0; label < kSyntheticClasses.size(); ++label) {
    const std::filesystem::path dir = out_dir / kSyntheticClasses[label];
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    Rng rng(mix_seed(seed, label));
    for (std::size_t k = 0; k < n_per_class; ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "img_%04zu.png", k);
      write_png(dir / name, synthetic_image(label, rng, size));
      ++written;
    }
  }
  return written;
}

}  // namespace bcdnet::data
