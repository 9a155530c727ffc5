#include "bcdnet/nn.hpp"

#include <cmath>

#include "bcdnet/ops.hpp"

namespace bcdnet::nn {

template <typename T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t padding, Rng& init, const std::string& name)
    : stride_(stride), padding_(padding) {
  if (kernel < 1 || stride < 1 || in_channels < 1 || out_channels < 1) {
    throw Error(ErrorKind::BadConfig, "conv2d needs kernel, stride and channels >= 1");
  }
  weight_ = Parameter<T>(name + ".weight",
                         he_uniform<T>({out_channels, in_channels, kernel, kernel},
                                       in_channels * kernel * kernel, init));
  bias_ = Parameter<T>(name + ".bias", Tensor<T>::zeros({out_channels}));
}

template <typename T>
Var<T> Conv2d<T>::forward(Var<T> x) {
  Tape<T>& tape = *x.tape;
  return ops::conv2d(x, tape.parameter(weight_), tape.parameter(bias_), stride_, padding_);
}

template <typename T>
MaxPool2d<T>::MaxPool2d(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window < 1 || stride < 1) throw Error(ErrorKind::BadConfig, "pool window/stride must be >= 1");
}

template <typename T>
Var<T> MaxPool2d<T>::forward(Var<T> x) {
  return ops::maxpool2d(x, window_, stride_);
}

template <typename T>
Var<T> ReLU<T>::forward(Var<T> x) {
  return ops::relu(x);
}

template <typename T>
Linear<T>::Linear(std::size_t in_features, std::size_t out_features, Rng& init,
                  const std::string& name) {
  if (in_features < 1 || out_features < 1) throw Error(ErrorKind::BadConfig, "linear extents must be >= 1");
  weight_ = Parameter<T>(name + ".weight",
                         he_uniform<T>({out_features, in_features}, in_features, init));
  bias_ = Parameter<T>(name + ".bias", Tensor<T>::zeros({out_features}));
}

template <typename T>
Var<T> Linear<T>::forward(Var<T> x) {
  Tape<T>& tape = *x.tape;
  return ops::linear(x, tape.parameter(weight_), tape.parameter(bias_));
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t channels, double eps, double momentum,
                            const std::string& name)
    : gamma_(name + ".gamma", Tensor<T>::full({channels}, T(1))),
      beta_(name + ".beta", Tensor<T>::zeros({channels})),
      running_mean_(Tensor<T>::zeros({channels})),
      running_var_(Tensor<T>::full({channels}, T(1))),
      name_(name),
      eps_(static_cast<T>(eps)),
      momentum_(static_cast<T>(momentum)) {
  if (!(eps > 0)) throw Error(ErrorKind::BadConfig, "batchnorm eps must be > 0");
  if (!(momentum >= 0 && momentum <= 1)) {
    throw Error(ErrorKind::BadConfig, "batchnorm momentum must be in [0, 1]");
  }
}

template <typename T>
std::vector<NamedBuffer<T>> BatchNorm2d<T>::buffers() {
  return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

template <typename T>
Var<T> BatchNorm2d<T>::forward(Var<T> x) {
  Tape<T>& tape = *x.tape;
  Var<T> gamma = tape.parameter(gamma_);
  Var<T> beta = tape.parameter(beta_);
  if (this->mode_ == Mode::Eval) {
    return ops::batchnorm2d_eval(x, gamma, beta, running_mean_, running_var_, eps_);
  }
  Tensor<T> mean, var;
  Var<T> y = ops::batchnorm2d_train(x, gamma, beta, eps_, &mean, &var);
  for (std::size_t c = 0; c < mean.size(); ++c) {
    running_mean_[c] = (T(1) - momentum_) * running_mean_[c] + momentum_ * mean[c];
    running_var_[c] = (T(1) - momentum_) * running_var_[c] + momentum_ * var[c];
  }
  return y;
}

template <typename T>
Dropout<T>::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0 && rate < 1)) throw Error(ErrorKind::BadConfig, "dropout rate must be in [0, 1)");
}

template <typename T>
Var<T> Dropout<T>::forward(Var<T> x) {
  if (this->mode_ == Mode::Eval || rate_ == 0.0) return x;
  const T scale = T(1) / (T(1) - static_cast<T>(rate_));
  Tensor<T> mask(x.shape());
  for (T& m : mask.data()) m = rng_.uniform() < rate_ ? T(0) : scale;
  return ops::apply_mask(x, std::move(mask));
}

template <typename T>
Var<T> Flatten<T>::forward(Var<T> x) {
  return ops::flatten(x);
}

template Tensor<float> he_uniform(Shape, std::size_t, Rng&);
template Tensor<double> he_uniform(Shape, std::size_t, Rng&);

#define BCDNET_LAYERS(T)         \
  template class Conv2d<T>;      \
  template class MaxPool2d<T>;   \
  template class ReLU<T>;        \
  template class Linear<T>;      \
  template class BatchNorm2d<T>; \
  template class Dropout<T>;     \
  template class Flatten<T>;

BCDNET_LAYERS(float)
BCDNET_LAYERS(double)

}  // namespace bcdnet::nn
