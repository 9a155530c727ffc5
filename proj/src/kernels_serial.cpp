// Serial reference kernels. Straight gather loops; every output element is
// accumulated in a fixed order that the OpenMP kernels reproduce exactly.

#include <cmath>

#include "bcdnet/kernels.hpp"
#include "kernel_instantiate.hpp"

namespace bcdnet::kernels::serial {

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void conv2d_forward(std::span<const T> x, std::span<const T> weight, std::span<const T> bias,
                    std::span<T> y, const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          T acc = T(0);
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (std::size_t p = 0; p < g.kernel; ++p) {
              const std::size_t row = i * g.stride + p;
              if (row < g.padding || row - g.padding >= g.height) continue;
              for (std::size_t q = 0; q < g.kernel; ++q) {
                const std::size_t col = j * g.stride + q;
                if (col < g.padding || col - g.padding >= g.width) continue;
                acc += x[((n * g.in_channels + c) * g.height + row - g.padding) * g.width + col -
                         g.padding] *
                       weight[((o * g.in_channels + c) * g.kernel + p) * g.kernel + q];
              }
            }
          }
          y[((n * g.out_channels + o) * oh + i) * ow + j] = acc + bias[o];
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(std::span<const T> gy, std::span<const T> weight, std::span<T> gx,
                           const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      for (std::size_t r = 0; r < g.height; ++r) {
        for (std::size_t s = 0; s < g.width; ++s) {
          T acc = T(0);
          for (std::size_t o = 0; o < g.out_channels; ++o) {
            for (std::size_t p = 0; p < g.kernel; ++p) {
              const std::size_t row = r + g.padding;
              if (row < p || (row - p) % g.stride != 0) continue;
              const std::size_t i = (row - p) / g.stride;
              if (i >= oh) continue;
              for (std::size_t q = 0; q < g.kernel; ++q) {
                const std::size_t col = s + g.padding;
                if (col < q || (col - q) % g.stride != 0) continue;
                const std::size_t j = (col - q) / g.stride;
                if (j >= ow) continue;
                acc += gy[((n * g.out_channels + o) * oh + i) * ow + j] *
                       weight[((o * g.in_channels + c) * g.kernel + p) * g.kernel + q];
              }
            }
          }
          gx[((n * g.in_channels + c) * g.height + r) * g.width + s] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(std::span<const T> gy, std::span<const T> x, std::span<T> gw,
                            std::span<T> gb, const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      for (std::size_t p = 0; p < g.kernel; ++p) {
        for (std::size_t q = 0; q < g.kernel; ++q) {
          T acc = T(0);
          for (std::size_t n = 0; n < g.batch; ++n) {
            for (std::size_t i = 0; i < oh; ++i) {
              const std::size_t row = i * g.stride + p;
              if (row < g.padding || row - g.padding >= g.height) continue;
              for (std::size_t j = 0; j < ow; ++j) {
                const std::size_t col = j * g.stride + q;
                if (col < g.padding || col - g.padding >= g.width) continue;
                acc += gy[((n * g.out_channels + o) * oh + i) * ow + j] *
                       x[((n * g.in_channels + c) * g.height + row - g.padding) * g.width + col -
                         g.padding];
              }
            }
          }
          gw[((o * g.in_channels + c) * g.kernel + p) * g.kernel + q] = acc;
        }
      }
    }
    T acc = T(0);
    for (std::size_t n = 0; n < g.batch; ++n) {
      for (std::size_t i = 0; i < oh * ow; ++i) acc += gy[(n * g.out_channels + o) * oh * ow + i];
    }
    gb[o] = acc;
  }
}

template <typename T>
void maxpool_forward(std::span<const T> x, std::span<T> y, const PoolGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t plane = 0; plane < g.batch * g.channels; ++plane) {
    const T* src = x.data() + plane * g.height * g.width;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        T best = src[i * g.stride * g.width + j * g.stride];
        for (std::size_t p = 0; p < g.window; ++p) {
          for (std::size_t q = 0; q < g.window; ++q) {
            const T v = src[(i * g.stride + p) * g.width + j * g.stride + q];
            if (v > best) best = v;
          }
        }
        y[(plane * oh + i) * ow + j] = best;
      }
    }
  }
}

template <typename T>
void maxpool_backward(std::span<const T> x, std::span<const T> gy, std::span<T> gx,
                      const PoolGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  std::fill(gx.begin(), gx.end(), T(0));
  for (std::size_t plane = 0; plane < g.batch * g.channels; ++plane) {
    const std::size_t base = plane * g.height * g.width;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        // First maximum in row-major window order wins ties.
        std::size_t best = base + i * g.stride * g.width + j * g.stride;
        for (std::size_t p = 0; p < g.window; ++p) {
          for (std::size_t q = 0; q < g.window; ++q) {
            const std::size_t at = base + (i * g.stride + p) * g.width + j * g.stride + q;
            if (x[at] > x[best]) best = at;
          }
        }
        gx[best] += gy[(plane * oh + i) * ow + j];
      }
    }
  }
}

template <typename T>
void channel_moments(std::span<const T> x, std::span<T> mean, std::span<T> var,
                     const ChannelGeometry& g) {
  const T count = static_cast<T>(g.per_channel());
  for (std::size_t c = 0; c < g.channels; ++c) {
    T acc = T(0);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* src = x.data() + (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) acc += src[s];
    }
    const T mu = acc / count;
    T sq = T(0);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* src = x.data() + (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) sq += (src[s] - mu) * (src[s] - mu);
    }
    mean[c] = mu;
    var[c] = sq / count;
  }
}

template <typename T>
void channel_normalize(std::span<const T> x, std::span<const T> mean, std::span<const T> inv_std,
                       std::span<const T> gamma, std::span<const T> beta, std::span<T> y,
                       const ChannelGeometry& g) {
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t c = 0; c < g.channels; ++c) {
      const std::size_t off = (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) {
        y[off + s] = gamma[c] * ((x[off + s] - mean[c]) * inv_std[c]) + beta[c];
      }
    }
  }
}

template <typename T>
void batchnorm_backward(std::span<const T> x, std::span<const T> gy, std::span<const T> mean,
                        std::span<const T> inv_std, std::span<const T> gamma, std::span<T> gx,
                        std::span<T> ggamma, std::span<T> gbeta, const ChannelGeometry& g) {
  const T count = static_cast<T>(g.per_channel());
  for (std::size_t c = 0; c < g.channels; ++c) {
    T sum_g = T(0);
    T sum_gx = T(0);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t off = (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) {
        sum_g += gy[off + s];
        sum_gx += gy[off + s] * ((x[off + s] - mean[c]) * inv_std[c]);
      }
    }
    ggamma[c] = sum_gx;
    gbeta[c] = sum_g;
    const T scale = gamma[c] * inv_std[c] / count;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t off = (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) {
        const T xhat = (x[off + s] - mean[c]) * inv_std[c];
        gx[off + s] = scale * (count * gy[off + s] - sum_g - xhat * sum_gx);
      }
    }
  }
}

template <typename T>
T sum(std::span<const T> x) {
  T acc = T(0);
  for (T v : x) acc += v;
  return acc;
}

BCDNET_INSTANTIATE(float)
BCDNET_INSTANTIATE(double)

}  // namespace bcdnet::kernels::serial
