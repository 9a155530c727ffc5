#include "bcdnet/ops.hpp"

#include <cmath>
#include <string>

#include "bcdnet/kernels.hpp"
#include "bcdnet/optim.hpp"

namespace bcdnet::ops {

namespace {

template <typename T>
using Inputs = typename Tape<T>::Inputs;

kernels::ConvGeometry conv_geometry(const Shape& x, const Shape& w, std::size_t stride,
                                    std::size_t padding) {
  kernels::ConvGeometry g;
  g.batch = x[0];
  g.in_channels = x[1];
  g.height = x[2];
  g.width = x[3];
  g.out_channels = w[0];
  g.kernel = w[2];
  g.stride = stride;
  g.padding = padding;
  return g;
}

kernels::ChannelGeometry channel_geometry(const Shape& x) {
  kernels::ChannelGeometry g;
  g.batch = x[0];
  g.channels = x[1];
  g.spatial = 1;
  for (std::size_t k = 2; k < x.size(); ++k) g.spatial *= x[k];
  return g;
}

template <typename T>
Tensor<T> inverse_std(const Tensor<T>& var, T eps) {
  return map(var, [eps](T v) { return T(1) / std::sqrt(v + eps); });
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t padding) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 4 || ws[2] != ws[3]) {
    throw Error(ErrorKind::ShapeMismatch,
                "conv2d expects NCHW input and square kernels, got " + shape_str(xs) + " and " +
                    shape_str(ws));
  }
  if (xs[1] != ws[1]) {
    throw Error(ErrorKind::ShapeMismatch, "conv2d input has " + std::to_string(xs[1]) +
                                              " channels, kernel expects " +
                                              std::to_string(ws[1]));
  }
  if (bias.shape() != Shape{ws[0]}) throw Error(ErrorKind::ShapeMismatch, "conv2d bias shape");
  if (stride < 1 || ws[2] < 1) throw Error(ErrorKind::BadConfig, "conv2d stride/kernel must be >= 1");
  if (xs[2] + 2 * padding < ws[2] || xs[3] + 2 * padding < ws[2]) {
    throw Error(ErrorKind::KernelTooLarge, "kernel " + std::to_string(ws[2]) +
                                               " exceeds padded input " + shape_str(xs));
  }
  const kernels::ConvGeometry g = conv_geometry(xs, ws, stride, padding);

  auto forward = [g](const Inputs<T>& in) {
    Tensor<T> y({g.batch, g.out_channels, g.out_height(), g.out_width()});
    kernels::conv2d_forward<T>(in[0]->data(), in[1]->data(), in[2]->data(), y.data(), g);
    return y;
  };
  auto backward = [g](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                      const std::vector<bool>& needs) {
    std::vector<Tensor<T>> grads(3);
    if (needs[0]) {
      grads[0] = Tensor<T>(in[0]->shape());
      kernels::conv2d_backward_input<T>(gy.data(), in[1]->data(), grads[0].data(), g);
    }
    if (needs[1] || needs[2]) {
      grads[1] = Tensor<T>(in[1]->shape());
      grads[2] = Tensor<T>(in[2]->shape());
      kernels::conv2d_backward_weight<T>(gy.data(), in[0]->data(), grads[1].data(),
                                         grads[2].data(), g);
    }
    return grads;
  };
  return x.tape->record("conv2d", {x, weight, bias}, forward, backward);
}

template <typename T>
Var<T> maxpool2d(Var<T> x, std::size_t window, std::size_t stride) {
  const Shape& xs = x.shape();
  if (xs.size() != 4) throw Error(ErrorKind::ShapeMismatch, "maxpool2d expects NCHW input");
  if (window < 1 || stride < 1) throw Error(ErrorKind::BadConfig, "pool window/stride must be >= 1");
  if (xs[2] < window || xs[3] < window) {
    throw Error(ErrorKind::WindowTooLarge,
                "window " + std::to_string(window) + " exceeds input " + shape_str(xs));
  }
  kernels::PoolGeometry g;
  g.batch = xs[0];
  g.channels = xs[1];
  g.height = xs[2];
  g.width = xs[3];
  g.window = window;
  g.stride = stride;

  auto forward = [g](const Inputs<T>& in) {
    Tensor<T> y({g.batch, g.channels, g.out_height(), g.out_width()});
    kernels::maxpool_forward<T>(in[0]->data(), y.data(), g);
    return y;
  };
  auto backward = [g](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                      const std::vector<bool>&) {
    std::vector<Tensor<T>> grads(1, Tensor<T>(in[0]->shape()));
    kernels::maxpool_backward<T>(in[0]->data(), gy.data(), grads[0].data(), g);
    return grads;
  };
  return x.tape->record("maxpool2d", {x}, forward, backward);
}

template <typename T>
Var<T> relu(Var<T> x) {
  auto forward = [](const Inputs<T>& in) {
    return map(*in[0], [](T v) { return v > T(0) ? v : T(0); });
  };
  auto backward = [](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                     const std::vector<bool>&) {
    return std::vector<Tensor<T>>{zip(*in[0], gy, [](T v, T g) { return v > T(0) ? g : T(0); })};
  };
  return x.tape->record("relu", {x}, forward, backward);
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1] || bias.shape() != Shape{ws[0]}) {
    throw Error(ErrorKind::ShapeMismatch, "linear of " + shape_str(xs) + " with weight " +
                                              shape_str(ws) + " and bias " +
                                              shape_str(bias.shape()));
  }
  auto forward = [](const Inputs<T>& in) {
    Tensor<T> y = matmul(*in[0], transpose2d(*in[1]));
    const std::size_t rows = y.dim(0), cols = y.dim(1);
    for (std::size_t n = 0; n < rows; ++n) {
      for (std::size_t o = 0; o < cols; ++o) y[n * cols + o] += (*in[2])[o];
    }
    return y;
  };
  auto backward = [](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                     const std::vector<bool>& needs) {
    std::vector<Tensor<T>> grads(3);
    if (needs[0]) grads[0] = matmul(gy, *in[1]);
    if (needs[1]) grads[1] = matmul(transpose2d(gy), *in[0]);
    if (needs[2]) grads[2] = reduce(gy, {0}, ReduceKind::Sum);
    return grads;
  };
  return x.tape->record("linear", {x, weight, bias}, forward, backward);
}

template <typename T>
Var<T> batchnorm2d_train(Var<T> x, Var<T> gamma, Var<T> beta, T eps, Tensor<T>* batch_mean,
                         Tensor<T>* batch_var) {
  const Shape& xs = x.shape();
  if (xs.size() < 2 || gamma.shape() != Shape{xs[1]} || beta.shape() != Shape{xs[1]}) {
    throw Error(ErrorKind::ShapeMismatch, "batchnorm of " + shape_str(xs));
  }
  const kernels::ChannelGeometry g = channel_geometry(xs);
  if (g.per_channel() < 2) {
    throw Error(ErrorKind::TooFewElements,
                "train-mode batchnorm needs at least 2 values per channel, got " +
                    std::to_string(g.per_channel()));
  }
  auto forward = [g, eps](const Inputs<T>& in) {
    Tensor<T> mean({g.channels}), var({g.channels});
    kernels::channel_moments<T>(in[0]->data(), mean.data(), var.data(), g);
    const Tensor<T> inv = inverse_std(var, eps);
    Tensor<T> y(in[0]->shape());
    kernels::channel_normalize<T>(in[0]->data(), mean.data(), inv.data(), in[1]->data(),
                                  in[2]->data(), y.data(), g);
    return y;
  };
  auto backward = [g, eps](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                           const std::vector<bool>&) {
    Tensor<T> mean({g.channels}), var({g.channels});
    kernels::channel_moments<T>(in[0]->data(), mean.data(), var.data(), g);
    const Tensor<T> inv = inverse_std(var, eps);
    std::vector<Tensor<T>> grads{Tensor<T>(in[0]->shape()), Tensor<T>({g.channels}),
                                 Tensor<T>({g.channels})};
    kernels::batchnorm_backward<T>(in[0]->data(), gy.data(), mean.data(), inv.data(),
                                   in[1]->data(), grads[0].data(), grads[1].data(),
                                   grads[2].data(), g);
    return grads;
  };
  if (batch_mean != nullptr || batch_var != nullptr) {
    Tensor<T> mean({g.channels}), var({g.channels});
    kernels::channel_moments<T>(x.value().data(), mean.data(), var.data(), g);
    if (batch_mean) *batch_mean = std::move(mean);
    if (batch_var) *batch_var = std::move(var);
  }
  return x.tape->record("batchnorm2d", {x, gamma, beta}, forward, backward);
}

template <typename T>
Var<T> batchnorm2d_eval(Var<T> x, Var<T> gamma, Var<T> beta, const Tensor<T>& running_mean,
                        const Tensor<T>& running_var, T eps) {
  const Shape& xs = x.shape();
  if (xs.size() < 2 || gamma.shape() != Shape{xs[1]} || beta.shape() != Shape{xs[1]} ||
      running_mean.shape() != Shape{xs[1]} || running_var.shape() != Shape{xs[1]}) {
    throw Error(ErrorKind::ShapeMismatch, "batchnorm of " + shape_str(xs));
  }
  const kernels::ChannelGeometry g = channel_geometry(xs);
  Tensor<T> mean = running_mean;
  Tensor<T> inv = inverse_std(running_var, eps);
  auto forward = [g, mean, inv](const Inputs<T>& in) {
    Tensor<T> y(in[0]->shape());
    kernels::channel_normalize<T>(in[0]->data(), mean.data(), inv.data(), in[1]->data(),
                                  in[2]->data(), y.data(), g);
    return y;
  };
  // With fixed statistics the layer is a per-channel affine map.
  auto backward = [g, mean, inv](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                                 const std::vector<bool>&) {
    std::vector<Tensor<T>> grads{Tensor<T>(in[0]->shape()), Tensor<T>({g.channels}),
                                 Tensor<T>({g.channels})};
    for (std::size_t n = 0; n < g.batch; ++n) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        const std::size_t off = (n * g.channels + c) * g.spatial;
        for (std::size_t s = 0; s < g.spatial; ++s) {
          const T xhat = ((*in[0])[off + s] - mean[c]) * inv[c];
          grads[0][off + s] = gy[off + s] * (*in[1])[c] * inv[c];
          grads[1][c] += gy[off + s] * xhat;
          grads[2][c] += gy[off + s];
        }
      }
    }
    return grads;
  };
  return x.tape->record("batchnorm2d_eval", {x, gamma, beta}, forward, backward);
}

template <typename T>
Var<T> apply_mask(Var<T> x, Tensor<T> mask) {
  if (mask.shape() != x.shape()) throw Error(ErrorKind::ShapeMismatch, "dropout mask shape");
  auto forward = [mask](const Inputs<T>& in) {
    return zip(*in[0], mask, [](T v, T m) { return v * m; });
  };
  auto backward = [mask](const Inputs<T>&, const Tensor<T>&, const Tensor<T>& gy,
                         const std::vector<bool>&) {
    return std::vector<Tensor<T>>{zip(gy, mask, [](T g, T m) { return g * m; })};
  };
  return x.tape->record("dropout", {x}, forward, backward);
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  const Shape original = x.shape();
  if (shape_numel(shape) != shape_numel(original)) {
    throw Error(ErrorKind::ShapeMismatch,
                "cannot reshape " + shape_str(original) + " to " + shape_str(shape));
  }
  auto forward = [shape](const Inputs<T>& in) { return in[0]->reshaped(shape); };
  auto backward = [original](const Inputs<T>&, const Tensor<T>&, const Tensor<T>& gy,
                             const std::vector<bool>&) {
    return std::vector<Tensor<T>>{gy.reshaped(original)};
  };
  return x.tape->record("reshape", {x}, forward, backward);
}

template <typename T>
Var<T> flatten(Var<T> x) {
  const Shape& xs = x.shape();
  if (xs.empty()) throw Error(ErrorKind::ShapeMismatch, "flatten of a scalar");
  std::size_t features = 1;
  for (std::size_t k = 1; k < xs.size(); ++k) features *= xs[k];
  return reshape(x, Shape{xs[0], features});
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  auto forward = [](const Inputs<T>& in) {
    return zip(*in[0], *in[1], [](T u, T v) { return u + v; });
  };
  auto backward = [](const Inputs<T>&, const Tensor<T>&, const Tensor<T>& gy,
                     const std::vector<bool>&) { return std::vector<Tensor<T>>{gy, gy}; };
  return a.tape->record("add", {a, b}, forward, backward);
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  auto forward = [](const Inputs<T>& in) {
    return zip(*in[0], *in[1], [](T u, T v) { return u * v; });
  };
  auto backward = [](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                     const std::vector<bool>&) {
    auto times = [](T g, T v) { return g * v; };
    return std::vector<Tensor<T>>{zip(gy, *in[1], times), zip(gy, *in[0], times)};
  };
  return a.tape->record("mul", {a, b}, forward, backward);
}

template <typename T>
Var<T> sum(Var<T> x) {
  auto forward = [](const Inputs<T>& in) {
    std::vector<std::size_t> axes(in[0]->rank());
    for (std::size_t k = 0; k < axes.size(); ++k) axes[k] = k;
    return reduce(*in[0], axes, ReduceKind::Sum);
  };
  auto backward = [](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                     const std::vector<bool>&) {
    return std::vector<Tensor<T>>{Tensor<T>::full(in[0]->shape(), gy[0])};
  };
  return x.tape->record("sum", {x}, forward, backward);
}

template <typename T>
Var<T> weighted_sum(Var<T> x, Tensor<T> weights) {
  if (weights.shape() != x.shape()) throw Error(ErrorKind::ShapeMismatch, "weighted_sum weights");
  auto forward = [weights](const Inputs<T>& in) {
    T acc = T(0);
    for (std::size_t i = 0; i < weights.size(); ++i) acc += (*in[0])[i] * weights[i];
    return Tensor<T>::scalar(acc);
  };
  auto backward = [weights](const Inputs<T>&, const Tensor<T>&, const Tensor<T>& gy,
                            const std::vector<bool>&) {
    const T g = gy[0];
    return std::vector<Tensor<T>>{map(weights, [g](T w) { return w * g; })};
  };
  return x.tape->record("weighted_sum", {x}, forward, backward);
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::vector<std::size_t> labels) {
  // Validates labels eagerly so errors surface at the call site.
  softmax_cross_entropy<T>(logits.value(), labels);
  auto forward = [labels](const Inputs<T>& in) {
    return Tensor<T>::scalar(softmax_cross_entropy<T>(*in[0], labels).loss);
  };
  auto backward = [labels](const Inputs<T>& in, const Tensor<T>&, const Tensor<T>& gy,
                           const std::vector<bool>&) {
    Tensor<T> grad = softmax_cross_entropy<T>(*in[0], labels).grad_logits;
    const T g = gy[0];
    for (T& v : grad.data()) v *= g;
    return std::vector<Tensor<T>>{std::move(grad)};
  };
  return logits.tape->record("cross_entropy", {logits}, forward, backward);
}

#define BCDNET_OPS(T)                                                                       \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t);                 \
  template Var<T> maxpool2d(Var<T>, std::size_t, std::size_t);                              \
  template Var<T> relu(Var<T>);                                                             \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                                           \
  template Var<T> batchnorm2d_train(Var<T>, Var<T>, Var<T>, T, Tensor<T>*, Tensor<T>*);     \
  template Var<T> batchnorm2d_eval(Var<T>, Var<T>, Var<T>, const Tensor<T>&,                \
                                   const Tensor<T>&, T);                                    \
  template Var<T> apply_mask(Var<T>, Tensor<T>);                                            \
  template Var<T> reshape(Var<T>, Shape);                                                   \
  template Var<T> flatten(Var<T>);                                                          \
  template Var<T> add(Var<T>, Var<T>);                                                      \
  template Var<T> mul(Var<T>, Var<T>);                                                      \
  template Var<T> sum(Var<T>);                                                              \
  template Var<T> weighted_sum(Var<T>, Tensor<T>);                                          \
  template Var<T> cross_entropy(Var<T>, std::vector<std::size_t>);

BCDNET_OPS(float)
BCDNET_OPS(double)

}  // namespace bcdnet::ops
