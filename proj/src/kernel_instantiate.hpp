#pragma once

// Explicit float/double instantiations for one kernel namespace.
#define BCDNET_INSTANTIATE(T)                                                                   \
  template void matmul<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t,    \
                          std::size_t, std::size_t);                                            \
  template void conv2d_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>,   \
                                  std::span<T>, const ConvGeometry&);                           \
  template void conv2d_backward_input<T>(std::span<const T>, std::span<const T>, std::span<T>,  \
                                         const ConvGeometry&);                                  \
  template void conv2d_backward_weight<T>(std::span<const T>, std::span<const T>, std::span<T>, \
                                          std::span<T>, const ConvGeometry&);                   \
  template void maxpool_forward<T>(std::span<const T>, std::span<T>, const PoolGeometry&);      \
  template void maxpool_backward<T>(std::span<const T>, std::span<const T>, std::span<T>,       \
                                    const PoolGeometry&);                                       \
  template void channel_moments<T>(std::span<const T>, std::span<T>, std::span<T>,              \
                                   const ChannelGeometry&);                                     \
  template void channel_normalize<T>(std::span<const T>, std::span<const T>, std::span<const T>, \
                                     std::span<const T>, std::span<const T>, std::span<T>,      \
                                     const ChannelGeometry&);                                   \
  template void batchnorm_backward<T>(std::span<const T>, std::span<const T>,                   \
                                      std::span<const T>, std::span<const T>,                   \
                                      std::span<const T>, std::span<T>, std::span<T>,           \
                                      std::span<T>, const ChannelGeometry&);                    \
  template T sum<T>(std::span<const T>);

