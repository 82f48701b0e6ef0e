/*
 * Copyright 2026 The cshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Complex scalar and tensor value types shared by the whole library.
//
// Tensors are dense, row-major and carry their shape explicitly. There are no
// strided views: reshaping copies nothing but slicing does, which is fine at
// the sizes this library targets.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "cshap/error.hpp"

namespace cshap {

using CScalar = std::complex<double>;
using Shape = std::vector<std::size_t>;

inline constexpr CScalar kI{0.0, 1.0};

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
    check_dims();
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
  }

  // 1-D tensor from a literal list.
  Tensor(std::initializer_list<T> values)
      : shape_{values.size()}, data_(values) {}

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Row-major multi-index access; rank must match.
  const T& at(std::initializer_list<std::size_t> index) const {
    return data_[flat_index(index)];
  }
  T& at(std::initializer_list<std::size_t> index) {
    return data_[flat_index(index)];
  }

  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " +
                       shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  bool operator==(const Tensor& other) const = default;

 private:
  void check_dims() const {
    for (std::size_t d : shape_) {
      if (d == 0) {
        throw ShapeError("tensor dimensions must be positive, got " +
                         shape_to_string(shape_));
      }
    }
  }

  std::size_t flat_index(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw ShapeError("index rank does not match tensor rank");
    }
    std::size_t flat = 0;
    std::size_t d = 0;
    for (std::size_t i : index) {
      if (i >= shape_[d]) throw ShapeError("tensor index out of range");
      flat = flat * shape_[d] + i;
      ++d;
    }
    return flat;
  }

  Shape shape_;
  std::vector<T> data_;
};

using CTensor = Tensor<CScalar>;
using RTensor = Tensor<double>;

template <class T, class F>
auto map(const Tensor<T>& t, F&& f) {
  using R = std::invoke_result_t<F&, const T&>;
  std::vector<R> out;
  out.reserve(t.size());
  for (const T& v : t.data()) out.push_back(f(v));
  return Tensor<R>(t.shape(), std::move(out));
}

template <class T, class F>
auto zip_map(const Tensor<T>& a, const Tensor<T>& b, F&& f) {
  if (a.shape() != b.shape()) {
    throw ShapeError("operand shapes differ: " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
  using R = std::invoke_result_t<F&, const T&, const T&>;
  std::vector<R> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(f(a[i], b[i]));
  return Tensor<R>(a.shape(), std::move(out));
}

inline CTensor conj(const CTensor& t) {
  return map(t, [](const CScalar& z) { return std::conj(z); });
}

inline CTensor operator+(const CTensor& a, const CTensor& b) {
  return zip_map(a, b, std::plus<>());
}

inline CTensor operator-(const CTensor& a, const CTensor& b) {
  return zip_map(a, b, std::minus<>());
}

inline CTensor operator*(CScalar s, const CTensor& t) {
  return map(t, [s](const CScalar& z) { return s * z; });
}

// Elementwise (Hadamard) product.
inline CTensor hadamard(const CTensor& a, const CTensor& b) {
  return zip_map(a, b, std::multiplies<>());
}

inline CScalar sum(const CTensor& t) {
  CScalar s{};
  for (const CScalar& z : t.data()) s += z;
  return s;
}

inline double max_abs_diff(const CTensor& a, const CTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const CTensor& a) {
  double m = 0.0;
  for (const CScalar& z : a.data()) m = std::max(m, std::abs(z));
  return m;
}

inline bool all_finite(const CTensor& t) {
  for (const CScalar& z : t.data()) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

// The two cogradients of a function with respect to some tensor variable.
struct WirtingerPair {
  CTensor d_z;
  CTensor d_zbar;
};

// Builds the Wirtinger pair from the partial derivatives with respect to the
// real and imaginary parts of the variable.
inline WirtingerPair wirtinger_from_real_parts(const CTensor& df_dre,
                                               const CTensor& df_dim) {
  if (df_dre.shape() != df_dim.shape()) {
    throw ShapeError("wirtinger_from_real_parts: shapes " +
                     shape_to_string(df_dre.shape()) + " and " +
                     shape_to_string(df_dim.shape()) + " differ");
  }
  return {zip_map(df_dre, df_dim,
                  [](const CScalar& a, const CScalar& b) {
                    return 0.5 * (a - kI * b);
                  }),
          zip_map(df_dre, df_dim, [](const CScalar& a, const CScalar& b) {
            return 0.5 * (a + kI * b);
          })};
}

enum class Reduction { kAbs, kRealPlusImag };

inline double reduce_scalar(const CScalar& z, Reduction mode) {
  return mode == Reduction::kAbs ? std::abs(z) : z.real() + z.imag();
}

// Collapses a complex saliency map into a real map.
inline RTensor reduce_saliency(const CTensor& phi, Reduction mode) {
  return map(phi, [mode](const CScalar& z) { return reduce_scalar(z, mode); });
}

}  // namespace cshap
