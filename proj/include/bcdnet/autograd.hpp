#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bcdnet/tensor.hpp"

namespace bcdnet {

// A trainable tensor with its accumulated gradient.
template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor<T>::zeros(value.shape())) {}

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

template <typename T>
void zero_grad(std::span<Parameter<T>* const> params) {
  for (Parameter<T>* p : params) p->grad.fill(T(0));
}

template <typename T>
class Tape;

// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

// Define-by-run tape. Leaves (inputs, parameters) hold values; every
// recorded node computes one new value from earlier ones, so recording order
// is a topological order.
template <typename T>
class Tape {
 public:
  using Inputs = std::vector<const Tensor<T>*>;
  using ForwardFn = std::function<Tensor<T>(const Inputs&)>;
  // Returns one gradient per input. `needs[i]` is false when input i does not
  // lead to anything trainable; the rule may return an empty tensor for it.
  using BackwardFn = std::function<std::vector<Tensor<T>>(
      const Inputs& inputs, const Tensor<T>& output, const Tensor<T>& upstream,
      const std::vector<bool>& needs)>;

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    std::size_t output;
    ForwardFn forward;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false);
  Var<T> parameter(Parameter<T>& param);

  // Runs `forward` on the input values and appends a node for the result.
  Var<T> record(std::string op, std::vector<Var<T>> inputs, ForwardFn forward,
                BackwardFn backward);

  // Reverse sweep from a scalar. Parameter gradients are accumulated (+=)
  // into Parameter::grad; gradients of requires_grad leaves are available
  // through grad() until the next backward call.
  void backward(Var<T> loss);

  const Tensor<T>& value(Var<T> v) const { return entries_.at(v.id).value; }
  const Tensor<T>& grad(Var<T> v) const { return entries_.at(v.id).grad; }
  bool requires_grad(Var<T> v) const { return entries_.at(v.id).requires_grad; }

  // Number of recorded nodes (leaves are not nodes).
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t producer(Var<T> v) const { return entries_.at(v.id).producer; }

  // Nodes whose backward rule ran during the last backward().
  std::size_t last_backward_visits() const { return visits_; }

  // Recomputes every node from the current leaf values, in recording order.
  std::vector<Tensor<T>> replay() const;

  static constexpr std::size_t kNoProducer = static_cast<std::size_t>(-1);

 private:
  struct Entry {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    std::size_t producer = kNoProducer;
  };

  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace bcdnet
