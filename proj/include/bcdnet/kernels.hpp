#pragma once

#include <cstddef>
#include <span>

namespace bcdnet {

enum class ExecMode { Deterministic, Fast };

// Process-wide kernel dispatch. Deterministic (the default) runs the serial
// reference kernels; Fast runs the OpenMP kernels.
void set_exec_mode(ExecMode mode);
ExecMode exec_mode();

class ScopedExecMode {
 public:
  explicit ScopedExecMode(ExecMode mode) : previous_(exec_mode()) { set_exec_mode(mode); }
  ~ScopedExecMode() { set_exec_mode(previous_); }
  ScopedExecMode(const ScopedExecMode&) = delete;
  ScopedExecMode& operator=(const ScopedExecMode&) = delete;

 private:
  ExecMode previous_;
};

namespace kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
};

struct PoolGeometry {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t window = 2;
  std::size_t stride = 2;

  std::size_t out_height() const { return (height - window) / stride + 1; }
  std::size_t out_width() const { return (width - window) / stride + 1; }
};

// Layout for per-channel kernels over an [N, C, spatial] tensor.
struct ChannelGeometry {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t spatial = 1;

  std::size_t per_channel() const { return batch * spatial; }
};

// Every kernel exists twice with an identical per-element accumulation order:
// `serial` is the reference and `parallel` the OpenMP version. Outputs are
// overwritten, never accumulated into.
#define BCDNET_DECLARE_KERNELS                                                                 \
  template <typename T>                                                                        \
  void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,       \
              std::size_t k, std::size_t n);                                                   \
  template <typename T>                                                                        \
  void conv2d_forward(std::span<const T> x, std::span<const T> weight, std::span<const T> bias, \
                      std::span<T> y, const ConvGeometry& g);                                  \
  template <typename T>                                                                        \
  void conv2d_backward_input(std::span<const T> gy, std::span<const T> weight, std::span<T> gx, \
                             const ConvGeometry& g);                                           \
  template <typename T>                                                                        \
  void conv2d_backward_weight(std::span<const T> gy, std::span<const T> x, std::span<T> gw,    \
                              std::span<T> gb, const ConvGeometry& g);                         \
  template <typename T>                                                                        \
  void maxpool_forward(std::span<const T> x, std::span<T> y, const PoolGeometry& g);           \
  template <typename T>                                                                        \
  void maxpool_backward(std::span<const T> x, std::span<const T> gy, std::span<T> gx,          \
                        const PoolGeometry& g);                                                \
  template <typename T>                                                                        \
  void channel_moments(std::span<const T> x, std::span<T> mean, std::span<T> var,              \
                       const ChannelGeometry& g);                                              \
  template <typename T>                                                                        \
  void channel_normalize(std::span<const T> x, std::span<const T> mean,                       \
                         std::span<const T> inv_std, std::span<const T> gamma,                \
                         std::span<const T> beta, std::span<T> y, const ChannelGeometry& g);  \
  template <typename T>                                                                        \
  void batchnorm_backward(std::span<const T> x, std::span<const T> gy, std::span<const T> mean, \
                          std::span<const T> inv_std, std::span<const T> gamma,                \
                          std::span<T> gx, std::span<T> ggamma, std::span<T> gbeta,            \
                          const ChannelGeometry& g);                                           \
  template <typename T>                                                                        \
  T sum(std::span<const T> x);

namespace serial {
BCDNET_DECLARE_KERNELS
}  // namespace serial

namespace parallel {
BCDNET_DECLARE_KERNELS
}  // namespace parallel

// Mode-dispatching entry points used by the rest of the library.
BCDNET_DECLARE_KERNELS

#undef BCDNET_DECLARE_KERNELS

}  // namespace kernels
}  // namespace bcdnet
