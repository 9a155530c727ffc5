#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "bcdnet/error.hpp"

namespace bcdnet {

using Shape = std::vector<std::size_t>;

enum class DType { Single, Double };

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense, contiguous, row-major n-dimensional array. Reshapes only touch the
// shape; there are no strided views.
template <typename T>
class Tensor {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "Tensor supports single and double precision only");

 public:
  using value_type = T;

  Tensor() : shape_{0} {}

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
      throw Error(ErrorKind::ShapeMismatch, "data length " + std::to_string(data_.size()) +
                                                " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T(0)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }
  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  static constexpr DType dtype() {
    return std::is_same_v<T, float> ? DType::Single : DType::Double;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Shape strides() const {
    Shape s(shape_.size(), 1);
    for (std::size_t k = shape_.size(); k-- > 1;) s[k - 1] = s[k] * shape_[k];
    return s;
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw Error(ErrorKind::ShapeMismatch, "index rank does not match " + shape_str(shape_));
    }
    std::size_t off = 0;
    std::size_t k = 0;
    for (std::size_t i : index) {
      if (i >= shape_[k]) throw Error(ErrorKind::ShapeMismatch, "index out of range");
      off = off * shape_[k] + i;
      ++k;
    }
    return off;
  }

  T& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  void reshape(Shape shape) {
    if (shape_numel(shape) != data_.size()) {
      throw Error(ErrorKind::ShapeMismatch,
                  "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    shape_ = std::move(shape);
  }

  Tensor reshaped(Shape shape) const& {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }

  Tensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> map(const Tensor<T>& t, auto&& f) {
  Tensor<T> out(t.shape());
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename T>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, auto&& f) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::ShapeMismatch,
                "zip of " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  Tensor<T> out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

enum class ReduceKind { Sum, Mean, Max };

// Removes the reduced axes. Deterministic mode accumulates in row-major order
// of the reduced indices; fast mode may reorder a full reduction.
template <typename T>
Tensor<T> reduce(const Tensor<T>& t, const std::vector<std::size_t>& axes, ReduceKind kind);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a);

template <typename T>
Tensor<T> pad2d(const Tensor<T>& t, std::size_t pad, T value);

}  // namespace bcdnet
