#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bcdnet/autograd.hpp"
#include "bcdnet/rng.hpp"

namespace bcdnet::nn {

enum class Mode { Train, Eval };

template <typename T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

// A layer: owns its parameters and buffers and records its forward pass on
// the tape of its input.
template <typename T>
class Module {
 public:
  virtual ~Module() = default;

  virtual std::string kind() const = 0;
  virtual Var<T> forward(Var<T> x) = 0;
  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual std::vector<NamedBuffer<T>> buffers() { return {}; }

  void set_mode(Mode mode) { mode_ = mode; }
  Mode mode() const { return mode_; }

 protected:
  Mode mode_ = Mode::Train;
};

// Zero-mean uniform with standard deviation sqrt(2 / fan_in).
template <typename T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng& rng);

template <typename T>
class Conv2d : public Module<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t padding, Rng& init, const std::string& name = "conv");

  std::string kind() const override { return "conv2d"; }
  Var<T> forward(Var<T> x) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  std::size_t stride() const { return stride_; }
  std::size_t padding() const { return padding_; }

 private:
  Parameter<T> weight_;
  Parameter<T> bias_;
  std::size_t stride_;
  std::size_t padding_;
};

template <typename T>
class MaxPool2d : public Module<T> {
 public:
  explicit MaxPool2d(std::size_t window = 2, std::size_t stride = 2);

  std::string kind() const override { return "maxpool2d"; }
  Var<T> forward(Var<T> x) override;

 private:
  std::size_t window_;
  std::size_t stride_;
};

template <typename T>
class ReLU : public Module<T> {
 public:
  std::string kind() const override { return "relu"; }
  Var<T> forward(Var<T> x) override;
};

template <typename T>
class Linear : public Module<T> {
 public:
  Linear(std::size_t in_features, std::size_t out_features, Rng& init,
         const std::string& name = "linear");

  std::string kind() const override { return "linear"; }
  Var<T> forward(Var<T> x) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// Train mode normalizes with batch statistics and folds them into the
// running estimates: r <- (1 - momentum) r + momentum * batch_stat.
// Eval mode normalizes with the running estimates.
template <typename T>
class BatchNorm2d : public Module<T> {
 public:
  explicit BatchNorm2d(std::size_t channels, double eps = 1e-5, double momentum = 0.1,
                       const std::string& name = "bn");

  std::string kind() const override { return "batchnorm2d"; }
  Var<T> forward(Var<T> x) override;
  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<NamedBuffer<T>> buffers() override;

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }
  T eps() const { return eps_; }

 private:
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  std::string name_;
  T eps_;
  T momentum_;
};

// Inverted dropout: train mode zeroes each element with probability p and
// scales survivors by 1/(1-p); eval mode is the identity.
template <typename T>
class Dropout : public Module<T> {
 public:
  explicit Dropout(double rate, std::uint64_t seed = 0);

  std::string kind() const override { return "dropout"; }
  Var<T> forward(Var<T> x) override;

  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
};

template <typename T>
class Flatten : public Module<T> {
 public:
  std::string kind() const override { return "flatten"; }
  Var<T> forward(Var<T> x) override;
};

}  // namespace bcdnet::nn
