/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "dance/error.hpp"

namespace dance {

/// Accumulator type for reductions: at least 64-bit.
template <class T>
using accum_t = std::conditional_t<(sizeof(T) < sizeof(double)), double, T>;

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major array with shape metadata. Rank-1 tensors behave as
/// 1xN row vectors wherever a matrix is expected.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    data_.assign(checked_size(shape_), fill);
  }

  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size())
      throw ConfigError("tensor shape " + shape_string(shape_) + " does not match " +
                        std::to_string(data_.size()) + " values");
  }

  static BasicTensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ConfigError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return BasicTensor({r, c}, std::move(data));
  }

  static BasicTensor vector(std::initializer_list<T> values) {
    return BasicTensor({values.size()}, std::vector<T>(values));
  }

  static BasicTensor scalar(T v) { return BasicTensor({1, 1}, std::vector<T>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Matrix view: rank-1 tensors are a single row.
  std::size_t rows() const noexcept {
    return shape_.size() >= 2 ? shape_[0] : (shape_.empty() ? 0 : 1);
  }
  std::size_t cols() const noexcept {
    if (shape_.empty()) return 0;
    if (shape_.size() == 1) return shape_[0];
    return data_.size() / shape_[0];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const BasicTensor& o) const noexcept { return shape_ == o.shape_; }

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  /// Copy of rows [begin, end) for rank-2 tensors, or of the selected rows.
  BasicTensor gather_rows(std::span<const std::size_t> idx) const {
    const std::size_t c = cols();
    std::vector<T> out;
    out.reserve(idx.size() * c);
    for (std::size_t r : idx) out.insert(out.end(), data_.begin() + r * c, data_.begin() + (r + 1) * c);
    return BasicTensor({idx.size(), c}, std::move(out));
  }

  BasicTensor slice_cols(std::size_t begin, std::size_t end) const {
    const std::size_t r = rows(), c = cols();
    if (begin >= end || end > c) throw ConfigError("column slice out of range");
    std::vector<T> out;
    out.reserve(r * (end - begin));
    for (std::size_t i = 0; i < r; ++i)
      out.insert(out.end(), data_.begin() + i * c + begin, data_.begin() + i * c + end);
    return BasicTensor({r, end - begin}, std::move(out));
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw ConfigError("tensor dimensions must be positive, got " + shape_string(shape));
      n *= d;
    }
    return n;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

/// Horizontal concatenation of two matrices with equal row counts.
template <class T>
BasicTensor<T> concat_cols(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rows() != b.rows())
    throw ConfigError("concat_cols row mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
  std::vector<T> out;
  out.reserve(r * (ca + cb));
  for (std::size_t i = 0; i < r; ++i) {
    auto ra = a.row(i);
    auto rb = b.row(i);
    out.insert(out.end(), ra.begin(), ra.end());
    out.insert(out.end(), rb.begin(), rb.end());
  }
  return BasicTensor<T>({r, ca + cb}, std::move(out));
}

template <class T>
std::size_t argmax_row(const BasicTensor<T>& m, std::size_t r) {
  auto row = m.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace dance
