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

/// @file layers.hpp
/// Layers with explicit forward/backward passes. Every layer caches what its
/// backward pass needs only when run in Mode::kTrain; backward() after an
/// evaluation-mode forward is a logic error.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/tensor.hpp"

namespace dacount {

enum class Mode { kTrain, kEval };

template <typename T>
struct Parameter {
  std::string name;
  AlignedVector<T> value;
  AlignedVector<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t size) : name(std::move(n)), value(size, T{0}), grad(size, T{0}) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T{0}); }
};

/// Non-trainable state that must survive a checkpoint (normalization statistics).
template <typename T>
struct Buffer {
  std::string name;
  AlignedVector<T>* data = nullptr;
};

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline void require_cached(bool cached, const char* layer) {
  if (!cached) throw std::logic_error(std::string(layer) + ": backward() without a training-mode forward()");
}

}  // namespace detail

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int padding)
      : weight(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
        bias(name + ".bias", static_cast<std::size_t>(out_channels)),
        in_(in_channels), out_(out_channels), k_(kernel), pad_(padding) {
    if (in_channels < 1 || out_channels < 1 || kernel < 1 || padding < 0) {
      throw std::invalid_argument("conv2d '" + name + "': invalid geometry");
    }
  }

  /// He-normal weights scaled by fan-in, zero bias.
  void init(std::mt19937_64& rng) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_) * k_ * k_));
    std::normal_distribution<double> dist(0.0, stddev);
    for (T& w : weight.value) w = static_cast<T>(dist(rng));
    std::fill(bias.value.begin(), bias.value.end(), T{0});
  }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Shape output_shape(const Shape& s) const {
    return Shape{s.n, out_, s.h + 2 * pad_ - k_ + 1, s.w + 2 * pad_ - k_ + 1};
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != in_) {
      throw std::invalid_argument(weight.name + ": expected " + std::to_string(in_) + " input channels, got " +
                                  std::to_string(x.c()));
    }
    const Shape os = output_shape(x.shape());
    if (os.h < 1 || os.w < 1) {
      throw std::invalid_argument(weight.name + ": input " + x.shape().str() + " too small for a " +
                                  std::to_string(k_) + "x" + std::to_string(k_) + " unpadded convolution");
    }
    Tensor<T> y(os);
    const int rows = in_ * k_ * k_;
    const int cols = os.h * os.w;
    Eigen::Map<const detail::RowMatrix<T>> w(weight.value.data(), out_, rows);
    Eigen::Map<const detail::ColVector<T>> b(bias.value.data(), out_);
    for (int n = 0; n < x.n(); ++n) {
      Eigen::Map<detail::RowMatrix<T>> out(y.sample(n), out_, cols);
      if (is_pointwise()) {
        Eigen::Map<const detail::RowMatrix<T>> in(x.sample(n), in_, cols);
        out.noalias() = w * in;
      } else {
        im2col(x.sample(n), x.h(), x.w(), os.h, os.w);
        Eigen::Map<const detail::RowMatrix<T>> in(columns_.data(), rows, cols);
        out.noalias() = w * in;
      }
      out.colwise() += b;
    }
    cached_ = mode == Mode::kTrain;
    if (cached_) input_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    detail::require_cached(cached_, "conv2d");
    const Tensor<T>& x = input_;
    const int rows = in_ * k_ * k_;
    const int cols = dy.h() * dy.w();
    Tensor<T> dx(x.shape());
    Eigen::Map<const detail::RowMatrix<T>> w(weight.value.data(), out_, rows);
    Eigen::Map<detail::RowMatrix<T>> dw(weight.grad.data(), out_, rows);
    Eigen::Map<detail::ColVector<T>> db(bias.grad.data(), out_);
    detail::RowMatrix<T> dcols;
    for (int n = 0; n < x.n(); ++n) {
      Eigen::Map<const detail::RowMatrix<T>> g(dy.sample(n), out_, cols);
      db += g.rowwise().sum();
      if (is_pointwise()) {
        Eigen::Map<const detail::RowMatrix<T>> in(x.sample(n), in_, cols);
        dw.noalias() += g * in.transpose();
        Eigen::Map<detail::RowMatrix<T>> din(dx.sample(n), in_, cols);
        din.noalias() = w.transpose() * g;
      } else {
        im2col(x.sample(n), x.h(), x.w(), dy.h(), dy.w());
        Eigen::Map<const detail::RowMatrix<T>> in(columns_.data(), rows, cols);
        dw.noalias() += g * in.transpose();
        dcols.noalias() = w.transpose() * g;
        col2im(dcols.data(), dx.sample(n), x.h(), x.w(), dy.h(), dy.w());
      }
    }
    return dx;
  }

  void clear_cache() {
    input_ = Tensor<T>();
    cached_ = false;
  }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  bool is_pointwise() const { return k_ == 1 && pad_ == 0; }

  void im2col(const T* src, int h, int w, int oh, int ow) {
    columns_.resize(static_cast<std::size_t>(in_) * k_ * k_ * oh * ow);
    T* dst = columns_.data();
    for (int c = 0; c < in_; ++c) {
      const T* plane = src + static_cast<std::size_t>(c) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const int x_lo = std::max(0, pad_ - kx);
          const int x_hi = std::min(ow, w + pad_ - kx);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy + ky - pad_;
            if (iy < 0 || iy >= h || x_lo >= x_hi) {
              std::fill(dst, dst + ow, T{0});
            } else {
              std::fill(dst, dst + x_lo, T{0});
              const T* row = plane + static_cast<std::size_t>(iy) * w + (kx - pad_);
              std::copy(row + x_lo, row + x_hi, dst + x_lo);
              std::fill(dst + x_hi, dst + ow, T{0});
            }
            dst += ow;
          }
        }
      }
    }
  }

  void col2im(const T* cols, T* dst, int h, int w, int oh, int ow) const {
    for (int c = 0; c < in_; ++c) {
      T* plane = dst + static_cast<std::size_t>(c) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const int x_lo = std::max(0, pad_ - kx);
          const int x_hi = std::min(ow, w + pad_ - kx);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy + ky - pad_;
            if (iy >= 0 && iy < h) {
              T* row = plane + static_cast<std::size_t>(iy) * w + (kx - pad_);
              for (int ox = x_lo; ox < x_hi; ++ox) row[ox] += cols[ox];
            }
            cols += ow;
          }
        }
      }
    }
  }

  int in_ = 0, out_ = 0, k_ = 0, pad_ = 0;
  Tensor<T> input_;
  bool cached_ = false;
  AlignedVector<T> columns_;
};

/// 2x2 transposed convolution with stride 2; doubles spatial size.
template <typename T>
class ConvTranspose2x2 {
 public:
  ConvTranspose2x2() = default;
  ConvTranspose2x2(std::string name, int in_channels, int out_channels)
      : weight(name + ".weight", static_cast<std::size_t>(in_channels) * out_channels * 4),
        bias(name + ".bias", static_cast<std::size_t>(out_channels)), in_(in_channels), out_(out_channels) {}

  void init(std::mt19937_64& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_));
    std::normal_distribution<double> dist(0.0, stddev);
    for (T& w : weight.value) w = static_cast<T>(dist(rng));
    std::fill(bias.value.begin(), bias.value.end(), T{0});
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != in_) throw std::invalid_argument(weight.name + ": input channel mismatch");
    const int h = x.h(), w = x.w(), hw = h * w;
    Tensor<T> y(x.n(), out_, 2 * h, 2 * w);
    // weight layout (in, out, 2, 2) viewed as an in x (out*4) matrix
    Eigen::Map<const detail::RowMatrix<T>> wm(weight.value.data(), in_, out_ * 4);
    detail::RowMatrix<T> cols(out_ * 4, hw);
    for (int n = 0; n < x.n(); ++n) {
      Eigen::Map<const detail::RowMatrix<T>> in(x.sample(n), in_, hw);
      cols.noalias() = wm.transpose() * in;
      for (int o = 0; o < out_; ++o) {
        const T b = bias.value[o];
        for (int d = 0; d < 4; ++d) {
          const int dy = d / 2, dx = d % 2;
          const T* src = cols.data() + static_cast<std::size_t>(o * 4 + d) * hw;
          for (int iy = 0; iy < h; ++iy) {
            T* row = &y(n, o, 2 * iy + dy, dx);
            for (int ix = 0; ix < w; ++ix) row[2 * ix] = src[iy * w + ix] + b;
          }
        }
      }
    }
    cached_ = mode == Mode::kTrain;
    if (cached_) input_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    detail::require_cached(cached_, "conv_transpose");
    const Tensor<T>& x = input_;
    const int h = x.h(), w = x.w(), hw = h * w;
    Tensor<T> dx(x.shape());
    Eigen::Map<const detail::RowMatrix<T>> wm(weight.value.data(), in_, out_ * 4);
    Eigen::Map<detail::RowMatrix<T>> dw(weight.grad.data(), in_, out_ * 4);
    detail::RowMatrix<T> dcols(out_ * 4, hw);
    for (int n = 0; n < x.n(); ++n) {
      for (int o = 0; o < out_; ++o) {
        T bsum = 0;
        for (int d = 0; d < 4; ++d) {
          const int ddy = d / 2, ddx = d % 2;
          T* dst = dcols.data() + static_cast<std::size_t>(o * 4 + d) * hw;
          for (int iy = 0; iy < h; ++iy) {
            const T* row = &dy(n, o, 2 * iy + ddy, ddx);
            for (int ix = 0; ix < w; ++ix) {
              dst[iy * w + ix] = row[2 * ix];
              bsum += row[2 * ix];
            }
          }
        }
        bias.grad[o] += bsum;
      }
      Eigen::Map<const detail::RowMatrix<T>> in(x.sample(n), in_, hw);
      dw.noalias() += in * dcols.transpose();
      Eigen::Map<detail::RowMatrix<T>> din(dx.sample(n), in_, hw);
      din.noalias() = wm * dcols;
    }
    return dx;
  }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  int in_ = 0, out_ = 0;
  Tensor<T> input_;
  bool cached_ = false;
};

/// Batch normalization over (N, H, W) per channel.
template <typename T>
class BatchNorm2d {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels)
      : gamma(name + ".gamma", channels), beta(name + ".beta", channels), running_mean(channels, T{0}),
        running_var(channels, T{1}), c_(channels), name_(std::move(name)) {
    std::fill(gamma.value.begin(), gamma.value.end(), T{1});
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != c_) throw std::invalid_argument(name_ + ": channel mismatch");
    Tensor<T> y(x.shape());
    const std::size_t plane = x.shape().plane();
    const double count = static_cast<double>(x.n()) * plane;
    cached_ = mode == Mode::kTrain;
    if (cached_) {
      xhat_ = Tensor<T>(x.shape());
      inv_std_.assign(c_, T{0});
    }
    for (int c = 0; c < c_; ++c) {
      double mean, var;
      if (mode == Mode::kTrain) {
        double s = 0.0;
        for (int n = 0; n < x.n(); ++n) {
          const T* p = &x(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) s += p[i];
        }
        mean = s / count;
        double ss = 0.0;
        for (int n = 0; n < x.n(); ++n) {
          const T* p = &x(n, c, 0, 0);
          for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - mean) * (p[i] - mean);
        }
        var = ss / count;
        const double unbiased = count > 1 ? ss / (count - 1) : var;
        running_mean[c] = static_cast<T>((1 - kMomentum) * running_mean[c] + kMomentum * mean);
        running_var[c] = static_cast<T>((1 - kMomentum) * running_var[c] + kMomentum * unbiased);
      } else {
        mean = running_mean[c];
        var = running_var[c];
      }
      const T inv_std = static_cast<T>(1.0 / std::sqrt(var + kEps));
      const T m = static_cast<T>(mean);
      const T g = gamma.value[c], b = beta.value[c];
      if (cached_) inv_std_[c] = inv_std;
      for (int n = 0; n < x.n(); ++n) {
        const T* p = &x(n, c, 0, 0);
        T* q = &y(n, c, 0, 0);
        T* xh = cached_ ? &xhat_(n, c, 0, 0) : nullptr;
        for (std::size_t i = 0; i < plane; ++i) {
          const T v = (p[i] - m) * inv_std;
          if (xh) xh[i] = v;
          q[i] = g * v + b;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    detail::require_cached(cached_, "batchnorm");
    Tensor<T> dx(dy.shape());
    const std::size_t plane = dy.shape().plane();
    const double count = static_cast<double>(dy.n()) * plane;
    for (int c = 0; c < c_; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int n = 0; n < dy.n(); ++n) {
        const T* g = &dy(n, c, 0, 0);
        const T* xh = &xhat_(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += g[i];
          sum_dy_xhat += static_cast<double>(g[i]) * xh[i];
        }
      }
      gamma.grad[c] += static_cast<T>(sum_dy_xhat);
      beta.grad[c] += static_cast<T>(sum_dy);
      const double gm = gamma.value[c];
      const double scale = gm * inv_std_[c] / count;
      for (int n = 0; n < dy.n(); ++n) {
        const T* g = &dy(n, c, 0, 0);
        const T* xh = &xhat_(n, c, 0, 0);
        T* d = &dx(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          d[i] = static_cast<T>(scale * (count * g[i] - sum_dy - xh[i] * sum_dy_xhat));
        }
      }
    }
    return dx;
  }

  Parameter<T> gamma;
  Parameter<T> beta;
  AlignedVector<T> running_mean;
  AlignedVector<T> running_var;

  const std::string& name() const { return name_; }

 private:
  int c_ = 0;
  std::string name_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  bool cached_ = false;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y(x.shape());
    auto in = x.values();
    auto out = y.values();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
    cached_ = mode == Mode::kTrain;
    if (cached_) output_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    detail::require_cached(cached_, "relu");
    Tensor<T> dx(dy.shape());
    auto g = dy.values();
    auto o = output_.values();
    auto d = dx.values();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = o[i] > T{0} ? g[i] : T{0};
    return dx;
  }

 private:
  Tensor<T> output_;
  bool cached_ = false;
};

template <typename T>
inline T stable_sigmoid(T v) {
  if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
  const T e = std::exp(v);
  return e / (T{1} + e);
}

template <typename T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y(x.shape());
    auto in = x.values();
    auto out = y.values();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = stable_sigmoid(in[i]);
    cached_ = mode == Mode::kTrain;
    if (cached_) output_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    detail::require_cached(cached_, "sigmoid");
    Tensor<T> dx(dy.shape());
    auto g = dy.values();
    auto o = output_.values();
    auto d = dx.values();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * o[i] * (T{1} - o[i]);
    return dx;
  }

 private:
  Tensor<T> output_;
  bool cached_ = false;
};

/// 2x2 max pooling, stride 2, floor on odd sizes.
template <typename T>
class MaxPool2x2 {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    const int oh = x.h() / 2, ow = x.w() / 2;
    if (oh < 1 || ow < 1) throw std::invalid_argument("maxpool: input " + x.shape().str() + " smaller than 2x2");
    Tensor<T> y(x.n(), x.c(), oh, ow);
    cached_ = mode == Mode::kTrain;
    if (cached_) {
      argmax_.resize(y.size());
      in_shape_ = x.shape();
    }
    std::size_t k = 0;
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < x.c(); ++c) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox, ++k) {
            int best_y = 2 * oy, best_x = 2 * ox;
            T best = x(n, c, best_y, best_x);
            for (int d = 1; d < 4; ++d) {
              const int iy = 2 * oy + d / 2, ix = 2 * ox + d % 2;
              if (x(n, c, iy, ix) > best) {
                best = x(n, c, iy, ix);
                best_y = iy;
                best_x = ix;
              }
            }
            y.data()[k] = best;
            if (cached_) argmax_[k] = static_cast<std::int32_t>(best_y * x.w() + best_x);
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    detail::require_cached(cached_, "maxpool");
    Tensor<T> dx(in_shape_);
    const std::size_t out_plane = dy.shape().plane();
    const std::size_t in_plane = in_shape_.plane();
    for (std::size_t k = 0; k < dy.size(); ++k) {
      const std::size_t plane_index = k / out_plane;
      dx.data()[plane_index * in_plane + static_cast<std::size_t>(argmax_[k])] += dy.data()[k];
    }
    return dx;
  }

 private:
  std::vector<std::int32_t> argmax_;
  Shape in_shape_;
  bool cached_ = false;
};

/// Identity forward; backward multiplies the incoming gradient by -lambda.
///
/// With @ref bypass set, the layer is a plain identity in both directions;
/// this exists so tests can compare against the unreversed gradient.
template <typename T>
class GradientReversal {
 public:
  double lambda = 0.0;
  bool bypass = false;

  Tensor<T> forward(const Tensor<T>& x, Mode /*mode*/) const { return x; }

  Tensor<T> backward(const Tensor<T>& dy) const {
    if (bypass) return dy;
    Tensor<T> dx(dy.shape());
    const T factor = static_cast<T>(-lambda);
    auto g = dy.values();
    auto d = dx.values();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = factor * g[i];
    return dx;
  }
};

template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode /*mode*/) {
    in_shape_ = x.shape();
    Tensor<T> y(x.n(), x.c(), 1, 1);
    const std::size_t plane = x.shape().plane();
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < x.c(); ++c) {
        const T* p = &x(n, c, 0, 0);
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
        y(n, c, 0, 0) = static_cast<T>(s / static_cast<double>(plane));
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx(in_shape_);
    const std::size_t plane = in_shape_.plane();
    const T inv = static_cast<T>(1.0 / static_cast<double>(plane));
    for (int n = 0; n < in_shape_.n; ++n) {
      for (int c = 0; c < in_shape_.c; ++c) {
        T* p = &dx(n, c, 0, 0);
        std::fill(p, p + plane, dy(n, c, 0, 0) * inv);
      }
    }
    return dx;
  }

 private:
  Shape in_shape_;
};

/// Convolution followed by batch normalization and rectification.
template <typename T>
class ConvBnRelu {
 public:
  ConvBnRelu() = default;
  ConvBnRelu(const std::string& name, int in_channels, int out_channels, int kernel, int padding)
      : conv(name + ".conv", in_channels, out_channels, kernel, padding), bn(name + ".bn", out_channels) {}

  void init(std::mt19937_64& rng) { conv.init(rng); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    return relu.forward(bn.forward(conv.forward(x, mode), mode), mode);
  }

  Tensor<T> backward(const Tensor<T>& dy) { return conv.backward(bn.backward(relu.backward(dy))); }

  void collect(std::vector<Parameter<T>*>& params) {
    params.insert(params.end(), {&conv.weight, &conv.bias, &bn.gamma, &bn.beta});
  }
  void collect_buffers(std::vector<Buffer<T>>& buffers) {
    buffers.push_back({bn.name() + ".running_mean", &bn.running_mean});
    buffers.push_back({bn.name() + ".running_var", &bn.running_var});
  }

  Conv2d<T> conv;
  BatchNorm2d<T> bn;
  ReLU<T> relu;
};

/// Two padded 3x3 ConvBnRelu units back to back.
template <typename T>
class DoubleConv {
 public:
  DoubleConv() = default;
  DoubleConv(const std::string& name, int in_channels, int out_channels)
      : first(name + ".0", in_channels, out_channels, 3, 1), second(name + ".1", out_channels, out_channels, 3, 1) {}

  void init(std::mt19937_64& rng) {
    first.init(rng);
    second.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) { return second.forward(first.forward(x, mode), mode); }
  Tensor<T> backward(const Tensor<T>& dy) { return first.backward(second.backward(dy)); }

  void collect(std::vector<Parameter<T>*>& params) {
    first.collect(params);
    second.collect(params);
  }
  void collect_buffers(std::vector<Buffer<T>>& buffers) {
    first.collect_buffers(buffers);
    second.collect_buffers(buffers);
  }

  ConvBnRelu<T> first;
  ConvBnRelu<T> second;
};

}  // namespace dacount
