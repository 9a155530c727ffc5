#include "bcdnet/autograd.hpp"

namespace bcdnet {

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Entry e;
  e.value = std::move(value);
  e.requires_grad = requires_grad;
  entries_.push_back(std::move(e));
  return Var<T>{this, entries_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::parameter(Parameter<T>& param) {
  Entry e;
  e.value = param.value;
  e.param = &param;
  e.requires_grad = true;
  entries_.push_back(std::move(e));
  return Var<T>{this, entries_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::record(std::string op, std::vector<Var<T>> inputs, ForwardFn forward,
                       BackwardFn backward) {
  Node node;
  node.op = std::move(op);
  Inputs values;
  bool any_grad = false;
  for (const Var<T>& v : inputs) {
    node.inputs.push_back(v.id);
    values.push_back(&entries_.at(v.id).value);
    any_grad = any_grad || entries_[v.id].requires_grad;
  }
  Entry e;
  e.value = forward(values);
  e.requires_grad = any_grad;
  e.producer = nodes_.size();
  node.output = entries_.size();
  node.forward = std::move(forward);
  node.backward = std::move(backward);
  entries_.push_back(std::move(e));
  nodes_.push_back(std::move(node));
  return Var<T>{this, entries_.size() - 1};
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  Entry& root = entries_.at(loss.id);
  if (root.value.size() != 1) {
    throw Error(ErrorKind::NotScalar,
                "backward needs a scalar loss, got " + shape_str(root.value.shape()));
  }
  for (Entry& e : entries_) e.grad = Tensor<T>();
  root.grad = Tensor<T>::full(root.value.shape(), T(1));
  visits_ = 0;

  for (std::size_t n = nodes_.size(); n-- > 0;) {
    const Node& node = nodes_[n];
    const Entry& out = entries_[node.output];
    if (!out.requires_grad || out.grad.empty()) continue;
    Inputs values;
    std::vector<bool> needs;
    for (std::size_t id : node.inputs) {
      values.push_back(&entries_[id].value);
      needs.push_back(entries_[id].requires_grad);
    }
    std::vector<Tensor<T>> grads = node.backward(values, out.value, out.grad, needs);
    ++visits_;
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      if (!needs[i] || i >= grads.size() || grads[i].empty()) continue;
      Entry& in = entries_[node.inputs[i]];
      if (grads[i].shape() != in.value.shape()) {
        throw Error(ErrorKind::ShapeMismatch, "gradient of " + node.op + " input has shape " +
                                                  shape_str(grads[i].shape()) + ", expected " +
                                                  shape_str(in.value.shape()));
      }
      if (in.grad.empty()) {
        in.grad = std::move(grads[i]);
      } else {
        auto dst = in.grad.data();
        auto src = grads[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

  for (Entry& e : entries_) {
    if (e.param == nullptr || e.grad.empty()) continue;
    auto dst = e.param->grad.data();
    auto src = e.grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

template <typename T>
std::vector<Tensor<T>> Tape<T>::replay() const {
  std::vector<Tensor<T>> values;
  values.reserve(entries_.size());
  for (const Entry& e : entries_) values.push_back(e.producer == kNoProducer ? e.value : Tensor<T>());
  std::vector<Tensor<T>> outputs;
  for (const Node& node : nodes_) {
    Inputs in;
    for (std::size_t id : node.inputs) in.push_back(&values[id]);
    values[node.output] = node.forward(in);
    outputs.push_back(values[node.output]);
  }
  return outputs;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace bcdnet
