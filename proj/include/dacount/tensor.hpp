// Copyright 2026 The dacount Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dacount {

/// Allocator with a fixed 64-byte alignment. Vectorized reductions peel
/// leading elements up to an aligned address, so buffers whose alignment
/// varies between runs would change the summation order.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense NCHW tensor.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{0}) : shape_(s), data_(s.numel(), fill) {}
  Tensor(int n, int c, int h, int w, T fill = T{0}) : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  const T& operator()(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T* sample(int n) { return data_.data() + static_cast<std::size_t>(n) * shape_.sample_size(); }
  const T* sample(int n) const { return data_.data() + static_cast<std::size_t>(n) * shape_.sample_size(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Samples [begin, end) as a new tensor.
  Tensor slice(int begin, int end) const {
    if (begin < 0 || end > shape_.n || begin > end) throw std::out_of_range("tensor batch slice out of range");
    Tensor out(Shape{end - begin, shape_.c, shape_.h, shape_.w});
    std::copy(sample(begin), sample(begin) + out.size(), out.data());
    return out;
  }

  Tensor& operator+=(const Tensor& o) {
    if (!(o.shape_ == shape_)) throw std::invalid_argument("tensor shape mismatch " + shape_.str() + " vs " + o.shape_.str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_;
  AlignedVector<T> data_;
};

/// Channel-wise concatenation [a, b].
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw std::invalid_argument("concat: incompatible shapes " + a.shape().str() + " and " + b.shape().str());
  }
  Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int n = 0; n < a.n(); ++n) {
    T* dst = out.sample(n);
    dst = std::copy(a.sample(n), a.sample(n) + a.shape().sample_size(), dst);
    std::copy(b.sample(n), b.sample(n) + b.shape().sample_size(), dst);
  }
  return out;
}

/// Inverse of concat_channels for gradients; first @p ca channels go to @p a.
template <typename T>
void split_channels(const Tensor<T>& g, int ca, Tensor<T>& a, Tensor<T>& b) {
  const int cb = g.c() - ca;
  a = Tensor<T>(g.n(), ca, g.h(), g.w());
  b = Tensor<T>(g.n(), cb, g.h(), g.w());
  const std::size_t plane = g.shape().plane();
  for (int n = 0; n < g.n(); ++n) {
    const T* src = g.sample(n);
    std::copy(src, src + ca * plane, a.sample(n));
    std::copy(src + ca * plane, src + (ca + cb) * plane, b.sample(n));
  }
}

}  // namespace dacount
