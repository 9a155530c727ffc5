#pragma once

#include <cstddef>
#include <vector>

#include "bcdnet/autograd.hpp"

namespace bcdnet::ops {

// Differentiable primitives recorded on a tape. Each one validates shapes,
// computes its forward value through the kernels and registers its analytic
// backward rule.

// Cross-correlation (no kernel flip). x: [N,C_in,H,W], weight:
// [C_out,C_in,k,k], bias: [C_out].
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t padding);

template <typename T>
Var<T> maxpool2d(Var<T> x, std::size_t window, std::size_t stride);

// Subgradient 0 at x == 0.
template <typename T>
Var<T> relu(Var<T> x);

// y = x * weight^T + bias. x: [N,in], weight: [out,in], bias: [out].
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);

// Batch statistics over (N,H,W) per channel. Writes the biased batch mean and
// variance to `batch_mean` / `batch_var` so the caller can update running
// statistics.
template <typename T>
Var<T> batchnorm2d_train(Var<T> x, Var<T> gamma, Var<T> beta, T eps, Tensor<T>* batch_mean,
                         Tensor<T>* batch_var);

// Fixed statistics (inference).
template <typename T>
Var<T> batchnorm2d_eval(Var<T> x, Var<T> gamma, Var<T> beta, const Tensor<T>& running_mean,
                        const Tensor<T>& running_var, T eps);

// y = x * mask, where mask already carries the 1/(1-p) scale.
template <typename T>
Var<T> apply_mask(Var<T> x, Tensor<T> mask);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

// [N, ...] -> [N, prod(...)].
template <typename T>
Var<T> flatten(Var<T> x);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> sum(Var<T> x);

// Scalar sum(x * weights) for a constant weight tensor.
template <typename T>
Var<T> weighted_sum(Var<T> x, Tensor<T> weights);

// Mean softmax cross-entropy over the batch.
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::vector<std::size_t> labels);

}  // namespace bcdnet::ops
