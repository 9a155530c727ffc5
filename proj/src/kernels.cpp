#include "bcdnet/kernels.hpp"

#include <atomic>

#include "kernel_instantiate.hpp"

namespace bcdnet {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::Deterministic};
}

void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }
ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }

namespace kernels {

#define BCDNET_DISPATCH(name, ...)                                         \
  do {                                                                     \
    if (exec_mode() == ExecMode::Fast) return parallel::name(__VA_ARGS__); \
    return serial::name(__VA_ARGS__);                                      \
  } while (0)

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
            std::size_t k, std::size_t n) {
  BCDNET_DISPATCH(matmul, a, b, c, m, k, n);
}

template <typename T>
void conv2d_forward(std::span<const T> x, std::span<const T> weight, std::span<const T> bias,
                    std::span<T> y, const ConvGeometry& g) {
  BCDNET_DISPATCH(conv2d_forward, x, weight, bias, y, g);
}

template <typename T>
void conv2d_backward_input(std::span<const T> gy, std::span<const T> weight, std::span<T> gx,
                           const ConvGeometry& g) {
  BCDNET_DISPATCH(conv2d_backward_input, gy, weight, gx, g);
}

template <typename T>
void conv2d_backward_weight(std::span<const T> gy, std::span<const T> x, std::span<T> gw,
                            std::span<T> gb, const ConvGeometry& g) {
  BCDNET_DISPATCH(conv2d_backward_weight, gy, x, gw, gb, g);
}

template <typename T>
void maxpool_forward(std::span<const T> x, std::span<T> y, const PoolGeometry& g) {
  BCDNET_DISPATCH(maxpool_forward, x, y, g);
}

template <typename T>
void maxpool_backward(std::span<const T> x, std::span<const T> gy, std::span<T> gx,
                      const PoolGeometry& g) {
  BCDNET_DISPATCH(maxpool_backward, x, gy, gx, g);
}

template <typename T>
void channel_moments(std::span<const T> x, std::span<T> mean, std::span<T> var,
                     const ChannelGeometry& g) {
  BCDNET_DISPATCH(channel_moments, x, mean, var, g);
}

template <typename T>
void channel_normalize(std::span<const T> x, std::span<const T> mean, std::span<const T> inv_std,
                       std::span<const T> gamma, std::span<const T> beta, std::span<T> y,
                       const ChannelGeometry& g) {
  BCDNET_DISPATCH(channel_normalize, x, mean, inv_std, gamma, beta, y, g);
}

template <typename T>
void batchnorm_backward(std::span<const T> x, std::span<const T> gy, std::span<const T> mean,
                        std::span<const T> inv_std, std::span<const T> gamma, std::span<T> gx,
                        std::span<T> ggamma, std::span<T> gbeta, const ChannelGeometry& g) {
  BCDNET_DISPATCH(batchnorm_backward, x, gy, mean, inv_std, gamma, gx, ggamma, gbeta, g);
}

template <typename T>
T sum(std::span<const T> x) {
  BCDNET_DISPATCH(sum, x);
}

#undef BCDNET_DISPATCH

BCDNET_INSTANTIATE(float)
BCDNET_INSTANTIATE(double)

}  // namespace kernels
}  // namespace bcdnet
