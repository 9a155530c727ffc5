#include "bcdnet/model.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace bcdnet {

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.input_hw = 64;
  c.block_channels = {8, 16};
  c.pool_window = 4;
  c.pool_stride = 4;
  c.fc_hidden = 32;
  c.dropout_rate = 0.25;
  return c;
}

std::vector<std::size_t> ModelConfig::block_extents() const {
  validate();
  std::vector<std::size_t> out;
  std::size_t hw = input_hw;
  for (std::size_t b = 0; b < block_channels.size(); ++b) {
    hw = (hw + 2 * conv_pad - kernel) / conv_stride + 1;
    hw = (hw - pool_window) / pool_stride + 1;
    out.push_back(hw);
  }
  return out;
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorKind::BadConfig, why); };
  if (in_channels < 1) bad("in_channels must be >= 1");
  if (block_channels.empty()) bad("at least one conv block is required");
  if (kernel < 1 || conv_stride < 1 || pool_window < 1 || pool_stride < 1) {
    bad("kernel, strides and pool window must be >= 1");
  }
  if (num_classes < 2) bad("num_classes must be >= 2");
  if (fc_hidden < 1) bad("fc_hidden must be >= 1");
  if (!(dropout_rate >= 0 && dropout_rate < 1)) bad("dropout_rate must be in [0, 1)");
  if (!(bn_eps > 0)) bad("bn_eps must be > 0");
  if (!(bn_momentum >= 0 && bn_momentum <= 1)) bad("bn_momentum must be in [0, 1]");
  std::size_t hw = input_hw;
  for (std::size_t b = 0; b < block_channels.size(); ++b) {
    if (block_channels[b] < 1) bad("block channels must be >= 1");
    if (hw + 2 * conv_pad < kernel || (hw + 2 * conv_pad - kernel) % conv_stride != 0) {
      bad("input_hw " + std::to_string(input_hw) + " does not divide evenly through conv of block " +
          std::to_string(b));
    }
    hw = (hw + 2 * conv_pad - kernel) / conv_stride + 1;
    if (hw < pool_window || (hw - pool_window) % pool_stride != 0) {
      bad("input_hw " + std::to_string(input_hw) + " does not divide evenly through pool of block " +
          std::to_string(b));
    }
    hw = (hw - pool_window) / pool_stride + 1;
  }
}

std::size_t ModelConfig::flatten_features() const {
  const std::size_t hw = block_extents().back();
  return block_channels.back() * hw * hw;
}

std::size_t ModelConfig::parameter_count() const {
  std::size_t total = 0;
  std::size_t in = in_channels;
  for (std::size_t out : block_channels) {
    total += out * in * kernel * kernel + out;  // conv
    total += 2 * out;                           // batchnorm gamma, beta
    in = out;
  }
  total += flatten_features() * fc_hidden + fc_hidden;
  total += fc_hidden * num_classes + num_classes;
  return total;
}

void reject_unknown_keys(const nlohmann::json& j, std::span<const char* const> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::BadConfig, where + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* key) { return item.key() == key; });
    if (!known) throw Error(ErrorKind::BadConfig, "unknown key '" + item.key() + "' in " + where);
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"in_channels", c.in_channels},   {"input_hw", c.input_hw},
                     {"block_channels", c.block_channels}, {"kernel", c.kernel},
                     {"conv_stride", c.conv_stride},   {"conv_pad", c.conv_pad},
                     {"pool_window", c.pool_window},   {"pool_stride", c.pool_stride},
                     {"fc_hidden", c.fc_hidden},       {"dropout_rate", c.dropout_rate},
                     {"num_classes", c.num_classes},   {"bn_eps", c.bn_eps},
                     {"bn_momentum", c.bn_momentum}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  static constexpr std::array kKeys{"in_channels", "input_hw",    "block_channels", "kernel",
                                    "conv_stride", "conv_pad",    "pool_window",    "pool_stride",
                                    "fc_hidden",   "dropout_rate", "num_classes",   "bn_eps",
                                    "bn_momentum"};
  reject_unknown_keys(j, kKeys, "model");
  // Missing keys keep their defaults.
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("in_channels", c.in_channels);
  get("input_hw", c.input_hw);
  get("block_channels", c.block_channels);
  get("kernel", c.kernel);
  get("conv_stride", c.conv_stride);
  get("conv_pad", c.conv_pad);
  get("pool_window", c.pool_window);
  get("pool_stride", c.pool_stride);
  get("fc_hidden", c.fc_hidden);
  get("dropout_rate", c.dropout_rate);
  get("num_classes", c.num_classes);
  get("bn_eps", c.bn_eps);
  get("bn_momentum", c.bn_momentum);
}

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  Rng init(seed);
  std::size_t in = config_.in_channels;
  for (std::size_t b = 0; b < config_.block_channels.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    const std::size_t out = config_.block_channels[b];
    layers_.push_back(std::make_unique<nn::Conv2d<T>>(in, out, config_.kernel, config_.conv_stride,
                                                      config_.conv_pad, init, prefix + ".conv"));
    layers_.push_back(std::make_unique<nn::BatchNorm2d<T>>(out, config_.bn_eps,
                                                           config_.bn_momentum, prefix + ".bn"));
    layers_.push_back(std::make_unique<nn::ReLU<T>>());
    layers_.push_back(std::make_unique<nn::MaxPool2d<T>>(config_.pool_window, config_.pool_stride));
    block_ends_.push_back(layers_.size());
    in = out;
  }
  layers_.push_back(std::make_unique<nn::Flatten<T>>());
  layers_.push_back(
      std::make_unique<nn::Linear<T>>(config_.flatten_features(), config_.fc_hidden, init, "fc1"));
  layers_.push_back(std::make_unique<nn::ReLU<T>>());
  auto dropout = std::make_unique<nn::Dropout<T>>(config_.dropout_rate, mix_seed(seed, 1));
  dropout_ = dropout.get();
  layers_.push_back(std::move(dropout));
  layers_.push_back(
      std::make_unique<nn::Linear<T>>(config_.fc_hidden, config_.num_classes, init, "fc2"));
  set_mode(nn::Mode::Train);
}

template <typename T>
void Model<T>::set_mode(nn::Mode mode) {
  mode_ = mode;
  for (auto& layer : layers_) layer->set_mode(mode);
}

template <typename T>
Var<T> Model<T>::forward(Var<T> x) {
  const Shape expected{x.shape().empty() ? 0 : x.shape()[0], config_.in_channels, config_.input_hw,
                       config_.input_hw};
  if (x.shape() != expected) {
    throw Error(ErrorKind::ShapeMismatch,
                "model expects " + shape_str(expected) + ", got " + shape_str(x.shape()));
  }
  for (auto& layer : layers_) x = layer->forward(x);
  return x;
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x) {
  Tape<T> tape;
  return forward(tape.leaf(x)).value();
}

template <typename T>
std::vector<Shape> Model<T>::shape_trace(std::size_t batch) {
  Tape<T> tape;
  Var<T> x = tape.leaf(Tensor<T>({batch, config_.in_channels, config_.input_hw, config_.input_hw}));
  std::vector<Shape> trace;
  const nn::Mode previous = mode_;
  set_mode(nn::Mode::Eval);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x);
    if (std::find(block_ends_.begin(), block_ends_.end(), i + 1) != block_ends_.end()) {
      trace.push_back(x.shape());
    }
  }
  trace.push_back(x.shape());
  set_mode(previous);
  return trace;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& layer : layers_) {
    for (Parameter<T>* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<nn::NamedBuffer<T>> Model<T>::buffers() {
  std::vector<nn::NamedBuffer<T>> out;
  for (auto& layer : layers_) {
    for (const nn::NamedBuffer<T>& b : layer->buffers()) out.push_back(b);
  }
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() {
  std::size_t n = 0;
  for (Parameter<T>* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
void Model<T>::reseed_dropout(std::uint64_t seed) {
  dropout_->reseed(seed);
}

template <typename T>
std::string Model<T>::describe() {
  std::ostringstream os;
  os << "layers:\n";
  const std::vector<Shape> trace = shape_trace(1);
  std::size_t block = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    os << "  " << layers_[i]->kind();
    for (Parameter<T>* p : layers_[i]->parameters()) os << ' ' << p->name << shape_str(p->value.shape());
    if (block < block_ends_.size() && block_ends_[block] == i + 1) {
      os << " -> " << shape_str(trace[block]);
      ++block;
    }
    os << '\n';
  }
  os << "flatten_features: " << config_.flatten_features() << '\n';
  os << "output: " << shape_str(trace.back()) << '\n';
  os << "parameters: " << parameter_count() << '\n';
  return os.str();
}

template class Model<float>;
template class Model<double>;

}  // namespace bcdnet
