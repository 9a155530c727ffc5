#include "bcdnet/optim.hpp"

#include <cmath>
#include <string>

namespace bcdnet {

template <typename T>
std::size_t argmax_row(const Tensor<T>& logits, std::size_t row) {
  const std::size_t classes = logits.dim(1);
  const T* r = logits.data().data() + row * classes;
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (r[c] > r[best]) best = c;
  }
  return best;
}

template <typename T>
CrossEntropyResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                            std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "logits " + shape_str(logits.shape()) + " vs " +
                                              std::to_string(labels.size()) + " labels");
  }
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (rows == 0) throw Error(ErrorKind::EmptyBatch, "cross entropy of an empty batch");
  for (std::size_t label : labels) {
    if (label >= classes) {
      throw Error(ErrorKind::BadLabel, "label " + std::to_string(label) + " outside [0, " +
                                           std::to_string(classes) + ")");
    }
  }

  CrossEntropyResult<T> result{T(0), Tensor<T>(logits.shape())};
  const T inv_rows = T(1) / static_cast<T>(rows);
  T total = T(0);
  for (std::size_t n = 0; n < rows; ++n) {
    const T* z = logits.data().data() + n * classes;
    T* g = result.grad_logits.data().data() + n * classes;
    const std::size_t top = argmax_row(logits, n);
    const T shift = z[top];
    // rest = sum of exp(z_c - max) over every class except the (first) argmax.
    T rest = T(0);
    for (std::size_t c = 0; c < classes; ++c) {
      if (c != top) rest += std::exp(z[c] - shift);
    }
    const T log_norm = std::log1p(rest);
    total += log_norm - (z[labels[n]] - shift);
    const T denom = T(1) + rest;
    for (std::size_t c = 0; c < classes; ++c) {
      const T p = (c == top ? T(1) : std::exp(z[c] - shift)) / denom;
      g[c] = p * inv_rows;
    }
    // 1 - p_top computed without cancellation.
    const std::size_t label = labels[n];
    g[label] = (label == top ? -rest / denom : g[label] - inv_rows);
    if (label == top) g[label] *= inv_rows;
  }
  result.loss = total * inv_rows;
  return result;
}

template <typename T>
double accuracy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "logits " + shape_str(logits.shape()) + " vs " +
                                              std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw Error(ErrorKind::EmptyBatch, "accuracy of an empty batch");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) hits += argmax_row(logits, n) == labels[n];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void AdamConfig::validate() const {
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw Error(ErrorKind::BadConfig, "adam betas must lie in [0, 1)");
  }
  if (!(eps > 0) || !(lr >= 0)) throw Error(ErrorKind::BadConfig, "adam lr/eps out of range");
}

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  config_.validate();
  for (Parameter<T>* p : params_) {
    m_.push_back(Tensor<T>::zeros(p->value.shape()));
    v_.push_back(Tensor<T>::zeros(p->value.shape()));
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T lr = static_cast<T>(config_.lr);
  const T eps = static_cast<T>(config_.eps);
  const T correction1 = T(1) - static_cast<T>(std::pow(config_.beta1, static_cast<double>(t_)));
  const T correction2 = T(1) - static_cast<T>(std::pow(config_.beta2, static_cast<double>(t_)));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto theta = params_[i]->value.data();
    auto grad = params_[i]->grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const T g = grad[k];
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      const T m_hat = m[k] / correction1;
      const T v_hat = v[k] / correction2;
      theta[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

double step_lr(double base_lr, double gamma, std::size_t step_size, std::size_t epoch) {
  return base_lr * std::pow(gamma, static_cast<double>(epoch / step_size));
}

void StepLR::validate() const {
  if (step_size < 1) throw Error(ErrorKind::BadConfig, "StepLR step_size must be >= 1");
  if (!(gamma > 0 && gamma <= 1)) throw Error(ErrorKind::BadConfig, "StepLR gamma must be in (0, 1]");
}

template std::size_t argmax_row(const Tensor<float>&, std::size_t);
template std::size_t argmax_row(const Tensor<double>&, std::size_t);
template CrossEntropyResult<float> softmax_cross_entropy(const Tensor<float>&,
                                                         std::span<const std::size_t>);
template CrossEntropyResult<double> softmax_cross_entropy(const Tensor<double>&,
                                                          std::span<const std::size_t>);
template double accuracy(const Tensor<float>&, std::span<const std::size_t>);
template double accuracy(const Tensor<double>&, std::span<const std::size_t>);
template class Adam<float>;
template class Adam<double>;

}  // namespace bcdnet
