#include <cmath>
#include <numbers>

#include "bcdnet/data.hpp"

namespace bcdnet::data {

namespace {

void require_chw(const Tensor<float>& image) {
  if (image.rank() != 3) {
    throw Error(ErrorKind::ShapeMismatch, "expected a [C,H,W] image, got " + shape_str(image.shape()));
  }
}

// Bilinear sample of one plane; taps outside the plane contribute zero.
float sample(const float* plane, std::size_t h, std::size_t w, double sy, double sx) {
  const double fy0 = std::floor(sy), fx0 = std::floor(sx);
  const double fy = sy - fy0, fx = sx - fx0;
  const long y0 = static_cast<long>(fy0), x0 = static_cast<long>(fx0);
  auto at = [&](long y, long x) -> double {
    if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) return 0.0;
    return plane[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  const double top = (1.0 - fx) * at(y0, x0) + (fx == 0.0 ? 0.0 : fx * at(y0, x0 + 1));
  if (fy == 0.0) return static_cast<float>(top);
  const double bottom = (1.0 - fx) * at(y0 + 1, x0) + (fx == 0.0 ? 0.0 : fx * at(y0 + 1, x0 + 1));
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

}  // namespace

void AugmentPolicy::validate() const {
  if (!(hflip_prob >= 0 && hflip_prob <= 1) || !(vflip_prob >= 0 && vflip_prob <= 1)) {
    throw Error(ErrorKind::BadConfig, "flip probabilities must lie in [0, 1]");
  }
  if (target_hw == 0) throw Error(ErrorKind::BadConfig, "target_hw must be > 0");
  if (!(rotation_deg >= 0)) throw Error(ErrorKind::BadConfig, "rotation must be >= 0 degrees");
  for (float s : std) {
    if (!(s > 0)) throw Error(ErrorKind::BadConfig, "normalization std must be > 0");
  }
}

Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t out_h, std::size_t out_w) {
  require_chw(image);
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == 0 || w == 0) throw Error(ErrorKind::ShapeMismatch, "cannot resize an empty image");
  Tensor<float> out({channels, out_h, out_w});
  const double scale_y = out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1) : 0.0;
  const double scale_x = out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1) : 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const float* plane = image.data().data() + c * h * w;
    float* dst = out.data().data() + c * out_h * out_w;
    for (std::size_t i = 0; i < out_h; ++i) {
      const double sy = std::min(static_cast<double>(i) * scale_y, static_cast<double>(h - 1));
      for (std::size_t j = 0; j < out_w; ++j) {
        const double sx = std::min(static_cast<double>(j) * scale_x, static_cast<double>(w - 1));
        dst[i * out_w + j] = sample(plane, h, w, sy, sx);
      }
    }
  }
  return out;
}

Tensor<float> hflip(const Tensor<float>& image) {
  require_chw(image);
  const std::size_t planes = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor<float> out(image.shape());
  for (std::size_t p = 0; p < planes * h; ++p) {
    for (std::size_t j = 0; j < w; ++j) out[p * w + j] = image[p * w + (w - 1 - j)];
  }
  return out;
}

Tensor<float> vflip(const Tensor<float>& image) {
  require_chw(image);
  const std::size_t planes = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor<float> out(image.shape());
  for (std::size_t c = 0; c < planes; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      std::copy_n(image.data().begin() + (c * h + (h - 1 - i)) * w, w,
                  out.data().begin() + (c * h + i) * w);
    }
  }
  return out;
}

Tensor<float> rotate(const Tensor<float>& image, double degrees) {
  require_chw(image);
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  Tensor<float> out(image.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    const float* plane = image.data().data() + c * h * w;
    float* dst = out.data().data() + c * h * w;
    for (std::size_t i = 0; i < h; ++i) {
      const double dy = static_cast<double>(i) - cy;
      for (std::size_t j = 0; j < w; ++j) {
        const double dx = static_cast<double>(j) - cx;
        // Inverse map: rotate the output coordinate back by -theta.
        const double sx = cos_t * dx - sin_t * dy + cx;
        const double sy = sin_t * dx + cos_t * dy + cy;
        dst[i * w + j] = sample(plane, h, w, sy, sx);
      }
    }
  }
  return out;
}

Tensor<float> normalize(const Tensor<float>& image, const AugmentPolicy& policy) {
  require_chw(image);
  if (image.dim(0) != 3) throw Error(ErrorKind::ShapeMismatch, "normalize expects 3 channels");
  const std::size_t plane = image.dim(1) * image.dim(2);
  Tensor<float> out(image.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] = (image[c * plane + i] - policy.mean[c]) / policy.std[c];
    }
  }
  return out;
}

Tensor<float> augment(const Tensor<float>& image, const AugmentPolicy& policy, Rng& rng) {
  Tensor<float> x = resize_bilinear(image, policy.target_hw, policy.target_hw);
  // Draws are made unconditionally so the stream position never depends on
  // the policy.
  const bool flip_h = rng.bernoulli(policy.hflip_prob);
  const bool flip_v = rng.bernoulli(policy.vflip_prob);
  const double angle = rng.uniform(-policy.rotation_deg, policy.rotation_deg);
  if (flip_h) x = hflip(x);
  if (flip_v) x = vflip(x);
  if (policy.rotation_deg > 0.0 && angle != 0.0) x = rotate(x, angle);
  return normalize(x, policy);
}

Tensor<float> preprocess(const Tensor<float>& image, const AugmentPolicy& policy) {
  return normalize(resize_bilinear(image, policy.target_hw, policy.target_hw), policy);
}

}  // namespace bcdnet::data
