#include "bcdnet/tensor.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "bcdnet/kernels.hpp"

namespace bcdnet {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BadAxis: return "BadAxis";
    case ErrorKind::EmptyReduce: return "EmptyReduce";
    case ErrorKind::NotScalar: return "NotScalar";
    case ErrorKind::NonDeterministicLayer: return "NonDeterministicLayer";
    case ErrorKind::KernelTooLarge: return "KernelTooLarge";
    case ErrorKind::WindowTooLarge: return "WindowTooLarge";
    case ErrorKind::TooFewElements: return "TooFewElements";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::NoClasses: return "NoClasses";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::NotFound: return "NotFound";
  }
  return "Unknown";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> reduce(const Tensor<T>& t, const std::vector<std::size_t>& axes, ReduceKind kind) {
  const std::size_t rank = t.rank();
  std::vector<bool> reduced(rank, false);
  for (std::size_t a : axes) {
    if (a >= rank) throw Error(ErrorKind::BadAxis, "axis " + std::to_string(a) + " out of range");
    if (reduced[a]) throw Error(ErrorKind::BadAxis, "axis " + std::to_string(a) + " repeated");
    reduced[a] = true;
  }

  Shape out_shape;
  std::size_t group = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    if (reduced[k]) {
      group *= t.dim(k);
    } else {
      out_shape.push_back(t.dim(k));
    }
  }
  if (group == 0 && kind != ReduceKind::Sum) {
    throw Error(ErrorKind::EmptyReduce, "mean/max over an empty axis");
  }

  // Full reduction can go through the (possibly parallel) sum kernel.
  if (out_shape.empty() && kind != ReduceKind::Max) {
    T total = kernels::sum<T>(t.data());
    if (kind == ReduceKind::Mean) total /= static_cast<T>(group);
    return Tensor<T>::scalar(total);
  }

  Tensor<T> out(out_shape, kind == ReduceKind::Max ? -std::numeric_limits<T>::infinity() : T(0));
  std::vector<bool> seen(out.size(), false);
  const Shape& shape = t.shape();
  std::vector<std::size_t> index(rank, 0);
  auto src = t.data();
  auto dst = out.data();
  // Walk the input in row-major order; each output slot sees its inputs in
  // row-major order of the reduced axes.
  for (std::size_t flat = 0; flat < src.size(); ++flat) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < rank; ++k) {
      if (!reduced[k]) o = o * shape[k] + index[k];
    }
    if (kind == ReduceKind::Max) {
      if (!seen[o] || src[flat] > dst[o]) dst[o] = src[flat];
      seen[o] = true;
    } else {
      dst[o] += src[flat];
    }
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < shape[k]) break;
      index[k] = 0;
    }
  }
  if (kind == ReduceKind::Mean) {
    for (T& v : dst) v /= static_cast<T>(group);
  }
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw Error(ErrorKind::ShapeMismatch,
                "matmul of " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  Tensor<T> c({a.dim(0), b.dim(1)});
  kernels::matmul<T>(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  if (a.rank() != 2) throw Error(ErrorKind::ShapeMismatch, "transpose2d needs a matrix");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  Tensor<T> out({cols, rows});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = a[i * cols + j];
  }
  return out;
}

template <typename T>
Tensor<T> pad2d(const Tensor<T>& t, std::size_t pad, T value) {
  if (t.rank() != 4) throw Error(ErrorKind::ShapeMismatch, "pad2d needs an NCHW tensor");
  if (pad == 0) return t;
  const std::size_t planes = t.dim(0) * t.dim(1), h = t.dim(2), w = t.dim(3);
  const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
  Tensor<T> out({t.dim(0), t.dim(1), ph, pw}, value);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < h; ++i) {
      std::copy_n(t.data().begin() + (p * h + i) * w, w,
                  out.data().begin() + (p * ph + i + pad) * pw + pad);
    }
  }
  return out;
}

template Tensor<float> reduce(const Tensor<float>&, const std::vector<std::size_t>&, ReduceKind);
template Tensor<double> reduce(const Tensor<double>&, const std::vector<std::size_t>&, ReduceKind);
template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> transpose2d(const Tensor<float>&);
template Tensor<double> transpose2d(const Tensor<double>&);
template Tensor<float> pad2d(const Tensor<float>&, std::size_t, float);
template Tensor<double> pad2d(const Tensor<double>&, std::size_t, double);

}  // namespace bcdnet
