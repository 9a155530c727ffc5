// OpenMP kernels. Loops are reordered for contiguous inner access, but each
// output element still accumulates its terms in the same order as the serial
// reference, so results are bit-identical. `sum` is the one exception: it is
// a parallel reduction and may differ in the last bits.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "bcdnet/kernels.hpp"
#include "kernel_instantiate.hpp"

namespace bcdnet::kernels::parallel {

namespace {

using index_t = std::int64_t;

// Range [lo, hi) of output positions j for which j*stride + tap - padding
// lands inside [0, extent).
struct ValidRange {
  std::size_t lo;
  std::size_t hi;
};

ValidRange valid_outputs(std::size_t tap, std::size_t padding, std::size_t stride,
                         std::size_t extent, std::size_t outputs) {
  std::size_t lo = 0;
  if (padding > tap) lo = (padding - tap + stride - 1) / stride;
  if (extent + padding < tap + 1) return {0, 0};
  std::size_t hi = (extent - 1 + padding - tap) / stride + 1;
  hi = std::min(hi, outputs);
  if (lo > hi) lo = hi;
  return {lo, hi};
}

}  // namespace

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
            std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (index_t ii = 0; ii < static_cast<index_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    T* row = c.data() + i * n;
    std::fill(row, row + n, T(0));
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      const T* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
}

template <typename T>
void conv2d_forward(std::span<const T> x, std::span<const T> weight, std::span<const T> bias,
                    std::span<T> y, const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const index_t planes = static_cast<index_t>(g.batch * g.out_channels);
#pragma omp parallel
  {
    std::vector<T> acc(oh * ow);
#pragma omp for schedule(static)
    for (index_t plane = 0; plane < planes; ++plane) {
      const std::size_t n = static_cast<std::size_t>(plane) / g.out_channels;
      const std::size_t o = static_cast<std::size_t>(plane) % g.out_channels;
      std::fill(acc.begin(), acc.end(), T(0));
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const T* src = x.data() + (n * g.in_channels + c) * g.height * g.width;
        for (std::size_t p = 0; p < g.kernel; ++p) {
          const ValidRange rows = valid_outputs(p, g.padding, g.stride, g.height, oh);
          for (std::size_t q = 0; q < g.kernel; ++q) {
            const ValidRange cols = valid_outputs(q, g.padding, g.stride, g.width, ow);
            const T w = weight[((o * g.in_channels + c) * g.kernel + p) * g.kernel + q];
            for (std::size_t i = rows.lo; i < rows.hi; ++i) {
              const T* in_row = src + (i * g.stride + p - g.padding) * g.width;
              T* out_row = acc.data() + i * ow;
              if (g.stride == 1) {
                const T* in = in_row + q - g.padding;
                for (std::size_t j = cols.lo; j < cols.hi; ++j) out_row[j] += in[j] * w;
              } else {
                for (std::size_t j = cols.lo; j < cols.hi; ++j) {
                  out_row[j] += in_row[j * g.stride + q - g.padding] * w;
                }
              }
            }
          }
        }
      }
      T* dst = y.data() + static_cast<std::size_t>(plane) * oh * ow;
      for (std::size_t e = 0; e < oh * ow; ++e) dst[e] = acc[e] + bias[o];
    }
  }
}

template <typename T>
void conv2d_backward_input(std::span<const T> gy, std::span<const T> weight, std::span<T> gx,
                           const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const index_t planes = static_cast<index_t>(g.batch * g.in_channels);
#pragma omp parallel for schedule(static)
  for (index_t plane = 0; plane < planes; ++plane) {
    const std::size_t n = static_cast<std::size_t>(plane) / g.in_channels;
    const std::size_t c = static_cast<std::size_t>(plane) % g.in_channels;
    T* dst = gx.data() + static_cast<std::size_t>(plane) * g.height * g.width;
    std::fill(dst, dst + g.height * g.width, T(0));
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      const T* up = gy.data() + (n * g.out_channels + o) * oh * ow;
      for (std::size_t p = 0; p < g.kernel; ++p) {
        const ValidRange rows = valid_outputs(p, g.padding, g.stride, g.height, oh);
        for (std::size_t q = 0; q < g.kernel; ++q) {
          const ValidRange cols = valid_outputs(q, g.padding, g.stride, g.width, ow);
          const T w = weight[((o * g.in_channels + c) * g.kernel + p) * g.kernel + q];
          for (std::size_t i = rows.lo; i < rows.hi; ++i) {
            T* out_row = dst + (i * g.stride + p - g.padding) * g.width;
            const T* up_row = up + i * ow;
            for (std::size_t j = cols.lo; j < cols.hi; ++j) {
              out_row[j * g.stride + q - g.padding] += up_row[j] * w;
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(std::span<const T> gy, std::span<const T> x, std::span<T> gw,
                            std::span<T> gb, const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const index_t pairs = static_cast<index_t>(g.out_channels * g.in_channels);
#pragma omp parallel for schedule(static)
  for (index_t pair = 0; pair < pairs; ++pair) {
    const std::size_t o = static_cast<std::size_t>(pair) / g.in_channels;
    const std::size_t c = static_cast<std::size_t>(pair) % g.in_channels;
    for (std::size_t p = 0; p < g.kernel; ++p) {
      const ValidRange rows = valid_outputs(p, g.padding, g.stride, g.height, oh);
      for (std::size_t q = 0; q < g.kernel; ++q) {
        const ValidRange cols = valid_outputs(q, g.padding, g.stride, g.width, ow);
        T acc = T(0);
        for (std::size_t n = 0; n < g.batch; ++n) {
          const T* up = gy.data() + (n * g.out_channels + o) * oh * ow;
          const T* src = x.data() + (n * g.in_channels + c) * g.height * g.width;
          for (std::size_t i = rows.lo; i < rows.hi; ++i) {
            const T* in_row = src + (i * g.stride + p - g.padding) * g.width;
            const T* up_row = up + i * ow;
            for (std::size_t j = cols.lo; j < cols.hi; ++j) {
              acc += up_row[j] * in_row[j * g.stride + q - g.padding];
            }
          }
        }
        gw[((o * g.in_channels + c) * g.kernel + p) * g.kernel + q] = acc;
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (index_t oo = 0; oo < static_cast<index_t>(g.out_channels); ++oo) {
    const std::size_t o = static_cast<std::size_t>(oo);
    T acc = T(0);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* up = gy.data() + (n * g.out_channels + o) * oh * ow;
      for (std::size_t e = 0; e < oh * ow; ++e) acc += up[e];
    }
    gb[o] = acc;
  }
}

template <typename T>
void maxpool_forward(std::span<const T> x, std::span<T> y, const PoolGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const index_t planes = static_cast<index_t>(g.batch * g.channels);
#pragma omp parallel for schedule(static)
  for (index_t plane = 0; plane < planes; ++plane) {
    const T* src = x.data() + static_cast<std::size_t>(plane) * g.height * g.width;
    T* dst = y.data() + static_cast<std::size_t>(plane) * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const T* window = src + i * g.stride * g.width + j * g.stride;
        T best = window[0];
        for (std::size_t p = 0; p < g.window; ++p) {
          for (std::size_t q = 0; q < g.window; ++q) best = std::max(best, window[p * g.width + q]);
        }
        dst[i * ow + j] = best;
      }
    }
  }
}

template <typename T>
void maxpool_backward(std::span<const T> x, std::span<const T> gy, std::span<T> gx,
                      const PoolGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const index_t planes = static_cast<index_t>(g.batch * g.channels);
#pragma omp parallel for schedule(static)
  for (index_t plane = 0; plane < planes; ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * g.height * g.width;
    std::fill(gx.begin() + base, gx.begin() + base + g.height * g.width, T(0));
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = base + i * g.stride * g.width + j * g.stride;
        for (std::size_t p = 0; p < g.window; ++p) {
          for (std::size_t q = 0; q < g.window; ++q) {
            const std::size_t at = base + (i * g.stride + p) * g.width + j * g.stride + q;
            if (x[at] > x[best]) best = at;
          }
        }
        gx[best] += gy[(static_cast<std::size_t>(plane) * oh + i) * ow + j];
      }
    }
  }
}

template <typename T>
void channel_moments(std::span<const T> x, std::span<T> mean, std::span<T> var,
                     const ChannelGeometry& g) {
  const T count = static_cast<T>(g.per_channel());
#pragma omp parallel for schedule(static)
  for (index_t cc = 0; cc < static_cast<index_t>(g.channels); ++cc) {
    const std::size_t c = static_cast<std::size_t>(cc);
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
  const index_t planes = static_cast<index_t>(g.batch * g.channels);
#pragma omp parallel for schedule(static)
  for (index_t plane = 0; plane < planes; ++plane) {
    const std::size_t c = static_cast<std::size_t>(plane) % g.channels;
    const std::size_t off = static_cast<std::size_t>(plane) * g.spatial;
    const T mu = mean[c], is = inv_std[c], ga = gamma[c], be = beta[c];
    for (std::size_t s = 0; s < g.spatial; ++s) y[off + s] = ga * ((x[off + s] - mu) * is) + be;
  }
}

template <typename T>
void batchnorm_backward(std::span<const T> x, std::span<const T> gy, std::span<const T> mean,
                        std::span<const T> inv_std, std::span<const T> gamma, std::span<T> gx,
                        std::span<T> ggamma, std::span<T> gbeta, const ChannelGeometry& g) {
  const T count = static_cast<T>(g.per_channel());
#pragma omp parallel for schedule(static)
  for (index_t cc = 0; cc < static_cast<index_t>(g.channels); ++cc) {
    const std::size_t c = static_cast<std::size_t>(cc);
    const T mu = mean[c], is = inv_std[c];
    T sum_g = T(0);
    T sum_gx = T(0);
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t off = (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) {
        sum_g += gy[off + s];
        sum_gx += gy[off + s] * ((x[off + s] - mu) * is);
      }
    }
    ggamma[c] = sum_gx;
    gbeta[c] = sum_g;
    const T scale = gamma[c] * is / count;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const std::size_t off = (n * g.channels + c) * g.spatial;
      for (std::size_t s = 0; s < g.spatial; ++s) {
        const T xhat = (x[off + s] - mu) * is;
        gx[off + s] = scale * (count * gy[off + s] - sum_g - xhat * sum_gx);
      }
    }
  }
}

template <typename T>
T sum(std::span<const T> x) {
  T acc = T(0);
  const index_t n = static_cast<index_t>(x.size());
#pragma omp parallel for reduction(+ : acc) schedule(static)
  for (index_t i = 0; i < n; ++i) acc += x[static_cast<std::size_t>(i)];
  return acc;
}

BCDNET_INSTANTIATE(float)
BCDNET_INSTANTIATE(double)

}  // namespace bcdnet::kernels::parallel
