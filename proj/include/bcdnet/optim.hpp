#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bcdnet/autograd.hpp"

namespace bcdnet {

template <typename T>
struct CrossEntropyResult {
  T loss;
  Tensor<T> grad_logits;  // (softmax - onehot) / N
};

// Mean over the batch of -log softmax(logits)[n, label_n]. Uses the max-shift
// and log1p so confident rows keep their tiny losses instead of rounding to 0.
template <typename T>
CrossEntropyResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                            std::span<const std::size_t> labels);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
template <typename T>
double accuracy(const Tensor<T>& logits, std::span<const std::size_t> labels);

// Lowest index among the maxima of one row.
template <typename T>
std::size_t argmax_row(const Tensor<T>& logits, std::size_t row);

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig config);

  // One bias-corrected update from the gradients currently in the parameters.
  void step();

  void set_lr(double lr) { config_.lr = lr; }
  double lr() const { return config_.lr; }
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Parameter<T>*>& params() const { return params_; }

  // Moment estimates, aligned with params().
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }
  void set_steps(std::size_t t) { t_ = t; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

// lr = base_lr * gamma^floor(epoch / step_size).
double step_lr(double base_lr, double gamma, std::size_t step_size, std::size_t epoch);

struct StepLR {
  double base_lr = 0.005;
  std::size_t step_size = 10;
  double gamma = 0.1;
  std::size_t epoch = 0;

  void validate() const;
  double lr() const { return step_lr(base_lr, gamma, step_size, epoch); }
  void step() { ++epoch; }
};

}  // namespace bcdnet
