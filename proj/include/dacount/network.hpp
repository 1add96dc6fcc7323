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

/// @file network.hpp
/// The counting model: a shared downsampling encoder, an upsampling density
/// decoder with skip concatenations, and a domain classifier that reads the
/// encoder bottleneck through a gradient reversal layer.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/core.hpp"
#include "dacount/layers.hpp"
#include "dacount/tensor.hpp"

namespace dacount {

enum class DensityActivation { kSigmoid, kLinear };

inline const char* to_string(DensityActivation a) { return a == DensityActivation::kSigmoid ? "sigmoid" : "linear"; }

struct ModelConfig {
  int depth = 4;         ///< number of pooling stages
  int base_width = 64;   ///< channels of the first stage; doubles per stage
  int domain_width = 256;
  int domain_stages = -1;  ///< conv+pool stages in the domain head; -1 derives it from image_size
  int image_size = 256;
  DensityActivation density_activation = DensityActivation::kSigmoid;
  bool domain_head = true;
  std::uint64_t seed = 0;

  int width(int level) const { return base_width << level; }
  int bottleneck_width() const { return base_width << depth; }

  /// Stages needed to shrink the bottleneck grid to at most 2x2.
  int resolved_domain_stages() const {
    if (domain_stages >= 0) return domain_stages;
    int s = image_size >> depth;
    int stages = 0;
    while (s > 2 && s >= 4) {
      s = (s - 2) / 2;
      ++stages;
    }
    return stages;
  }

  void validate() const {
    if (depth < 1 || depth > 8) throw std::invalid_argument("model depth must lie in [1, 8]");
    if (base_width < 1 || (static_cast<long long>(base_width) << depth) > (1 << 16)) {
      throw std::invalid_argument("model base_width must be >= 1 and keep the bottleneck below 65536 channels");
    }
    if (domain_width < 1) throw std::invalid_argument("domain_width must be >= 1");
    if (domain_stages < -1) throw std::invalid_argument("domain_stages must be >= 0, or -1 for automatic");
    const int unit = 1 << depth;
    if (image_size < unit || image_size % unit != 0) {
      throw std::invalid_argument("image_size " + std::to_string(image_size) + " is not a positive multiple of 2^depth = " +
                                  std::to_string(unit));
    }
  }
};

/// Stacks same-sized images into an N x 3 x H x W tensor.
template <typename T>
Tensor<T> to_tensor(std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("to_tensor: empty image batch");
  const int h = images.front().height(), w = images.front().width();
  Tensor<T> t(static_cast<int>(images.size()), Image::kChannels, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != h || images[i].width() != w) {
      throw std::invalid_argument("to_tensor: image '" + images[i].id() + "' differs in size from the batch");
    }
    const auto px = images[i].pixels();
    std::copy(px.begin(), px.end(), t.sample(static_cast<int>(i)));
  }
  return t;
}

template <typename T>
class CountingModel {
 public:
  struct Outputs {
    Tensor<T> density;       ///< N x 1 x H x W
    std::vector<T> domain;   ///< one probability of "source" per image; empty if not requested
  };

  explicit CountingModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.depth;
    int in = Image::kChannels;
    for (int l = 0; l < d; ++l) {
      encoder_.emplace_back("enc" + std::to_string(l), in, cfg_.width(l));
      in = cfg_.width(l);
    }
    pools_.resize(d);
    bottleneck_ = DoubleConv<T>("bottleneck", in, cfg_.bottleneck_width());
    for (int l = 0; l < d; ++l) {
      const int below = l + 1 == d ? cfg_.bottleneck_width() : cfg_.width(l + 1);
      ups_.emplace_back("up" + std::to_string(l), below, cfg_.width(l));
      decoder_.emplace_back("dec" + std::to_string(l), 2 * cfg_.width(l), cfg_.width(l));
    }
    output_conv_ = Conv2d<T>("density_out", cfg_.width(0), 1, 1, 0);

    if (cfg_.domain_head) {
      const int stages = cfg_.resolved_domain_stages();
      int dc = cfg_.bottleneck_width();
      for (int s = 0; s < stages; ++s) {
        domain_convs_.emplace_back("domain" + std::to_string(s), dc, cfg_.domain_width, 3, 0);
        dc = cfg_.domain_width;
      }
      domain_pools_.resize(stages);
      domain_out_ = Conv2d<T>("domain_out", dc, 1, 1, 0);
    }

    std::mt19937_64 rng(cfg_.seed);
    for (auto& b : encoder_) b.init(rng);
    bottleneck_.init(rng);
    for (int l = 0; l < d; ++l) {
      ups_[l].init(rng);
      decoder_[l].init(rng);
    }
    output_conv_.init(rng);
    for (auto& c : domain_convs_) c.init(rng);
    if (cfg_.domain_head) domain_out_.init(rng);
  }

  const ModelConfig& config() const { return cfg_; }
  bool has_domain_head() const { return cfg_.domain_head; }

  double grl_lambda() const { return grl_.lambda; }
  void set_grl_lambda(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("gradient reversal lambda must be >= 0");
    grl_.lambda = lambda;
  }
  GradientReversal<T>& grl() { return grl_; }

  /// Throws unless @p x is N x 3 x H x W with H and W multiples of 2^depth.
  void check_input(const Shape& s) const {
    const int unit = 1 << cfg_.depth;
    if (s.n < 1 || s.c != Image::kChannels) {
      throw std::invalid_argument("model input must be a nonempty batch of 3-channel images, got " + s.str());
    }
    if (s.h < unit || s.w < unit || s.h % unit != 0 || s.w % unit != 0) {
      throw std::invalid_argument("input size " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                                  " is not divisible by 2^" + std::to_string(cfg_.depth) + " = " +
                                  std::to_string(unit) + " (one halving per downsampling block)");
    }
  }

  /// Runs the encoder on the whole batch, the domain head on the whole batch
  /// when @p with_domain, and the density decoder on the first
  /// @p density_samples images only (all when negative).
  Outputs forward(const Tensor<T>& x, Mode mode, bool with_domain, int density_samples = -1) {
    check_input(x.shape());
    if (with_domain && !cfg_.domain_head) throw std::logic_error("model was built without a domain head");
    if (density_samples < 0 || density_samples > x.n()) density_samples = x.n();
    Outputs out;
    Tensor<T> bottom = encode(x, mode);
    if (with_domain) out.domain = classify_domain(bottom, mode);
    if (density_samples == x.n()) {
      out.density = decode(std::move(bottom), mode);
    } else if (density_samples > 0) {
      out.density = decode(bottom.slice(0, density_samples), mode);
    }
    density_ran_ = mode == Mode::kTrain && density_samples > 0;
    domain_ran_ = mode == Mode::kTrain && with_domain;
    if (mode == Mode::kEval) skips_.clear();
    return out;
  }

  Tensor<T> forward_density(const Tensor<T>& x, Mode mode) { return forward(x, mode, false).density; }

  std::vector<T> forward_domain(const Tensor<T>& x, Mode mode) {
    check_input(x.shape());
    if (!cfg_.domain_head) throw std::logic_error("model was built without a domain head");
    Tensor<T> bottom = encode(x, mode);
    auto p = classify_domain(bottom, mode);
    density_ran_ = false;
    domain_ran_ = mode == Mode::kTrain;
    if (mode == Mode::kEval) skips_.clear();
    return p;
  }

  /// Encoder output (the deepest feature grid) for @p x.
  Tensor<T> bottleneck_features(const Tensor<T>& x, Mode mode) {
    check_input(x.shape());
    Tensor<T> b = encode(x, mode);
    density_ran_ = domain_ran_ = false;
    if (mode == Mode::kEval) skips_.clear();
    return b;
  }

  /// Domain head applied to precomputed bottleneck features, optionally
  /// skipping the reversal layer altogether.
  std::vector<T> domain_from_features(const Tensor<T>& bottom, Mode mode, bool through_reversal = true) {
    if (!cfg_.domain_head) throw std::logic_error("model was built without a domain head");
    auto p = classify_domain(bottom, mode, through_reversal);
    domain_ran_ = false;
    return p;
  }

  /// Accumulates parameter gradients for the last training-mode forward().
  ///
  /// @p d_density is dLoss/d(density output) or null; @p d_domain is
  /// dLoss/d(domain probability) per image, or empty.
  void backward(const Tensor<T>* d_density, std::span<const T> d_domain) {
    const int d = cfg_.depth;
    Tensor<T> g_bottom(bottom_shape_);
    std::vector<Tensor<T>> g_skips(d);
    for (int l = 0; l < d; ++l) g_skips[l] = Tensor<T>(skips_[l].shape());

    if (d_density) {
      if (!density_ran_) throw std::logic_error("backward: no training-mode density forward to differentiate");
      Tensor<T> g = cfg_.density_activation == DensityActivation::kSigmoid ? out_sigmoid_.backward(*d_density)
                                                                             : *d_density;
      g = output_conv_.backward(g);
      for (int l = 0; l < d; ++l) {
        g = decoder_[l].backward(g);
        Tensor<T> g_up, g_skip;
        split_channels(g, cfg_.width(l), g_skip, g_up);
        std::copy(g_skip.data(), g_skip.data() + g_skip.size(), g_skips[l].data());
        g = ups_[l].backward(g_up);
      }
      std::copy(g.data(), g.data() + g.size(), g_bottom.data());
    }
    if (!d_domain.empty()) {
      if (!domain_ran_) throw std::logic_error("backward: no training-mode domain forward to differentiate");
      Tensor<T> g(static_cast<int>(d_domain.size()), 1, 1, 1);
      std::copy(d_domain.begin(), d_domain.end(), g.data());
      g = domain_out_.backward(gap_.backward(domain_sigmoid_.backward(g)));
      for (int s = static_cast<int>(domain_convs_.size()) - 1; s >= 0; --s) {
        g = domain_convs_[s].backward(domain_pools_[s].backward(g));
      }
      g_bottom += grl_.backward(g);
    }

    Tensor<T> g = bottleneck_.backward(g_bottom);
    for (int l = d - 1; l >= 0; --l) {
      g = pools_[l].backward(g);
      g += g_skips[l];
      g = encoder_[l].backward(g);
    }
  }

  /// Downsampling subnetwork, including the bottleneck block.
  std::vector<Parameter<T>*> encoder_parameters() {
    std::vector<Parameter<T>*> p;
    for (auto& b : encoder_) b.collect(p);
    bottleneck_.collect(p);
    return p;
  }

  /// Upsampling subnetwork and the density output layer.
  std::vector<Parameter<T>*> decoder_parameters() {
    std::vector<Parameter<T>*> p;
    for (int l = 0; l < cfg_.depth; ++l) {
      p.push_back(&ups_[l].weight);
      p.push_back(&ups_[l].bias);
      decoder_[l].collect(p);
    }
    p.push_back(&output_conv_.weight);
    p.push_back(&output_conv_.bias);
    return p;
  }

  std::vector<Parameter<T>*> domain_parameters() {
    std::vector<Parameter<T>*> p;
    if (!cfg_.domain_head) return p;
    for (auto& c : domain_convs_) c.collect(p);
    p.push_back(&domain_out_.weight);
    p.push_back(&domain_out_.bias);
    return p;
  }

  std::vector<Parameter<T>*> parameters() {
    auto p = encoder_parameters();
    auto dec = decoder_parameters();
    auto dom = domain_parameters();
    p.insert(p.end(), dec.begin(), dec.end());
    p.insert(p.end(), dom.begin(), dom.end());
    return p;
  }

  std::vector<Buffer<T>> buffers() {
    std::vector<Buffer<T>> b;
    for (auto& e : encoder_) e.collect_buffers(b);
    bottleneck_.collect_buffers(b);
    for (auto& dcv : decoder_) dcv.collect_buffers(b);
    for (auto& c : domain_convs_) c.collect_buffers(b);
    return b;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

 private:
  Tensor<T> encode(const Tensor<T>& x, Mode mode) {
    skips_.assign(cfg_.depth, Tensor<T>());
    Tensor<T> y = x;
    for (int l = 0; l < cfg_.depth; ++l) {
      skips_[l] = encoder_[l].forward(y, mode);
      y = pools_[l].forward(skips_[l], mode);
    }
    y = bottleneck_.forward(y, mode);
    bottom_shape_ = y.shape();
    return y;
  }

  Tensor<T> decode(Tensor<T> y, Mode mode) {
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      Tensor<T> up = ups_[l].forward(y, mode);
      const Tensor<T>& skip = skips_[l].n() == y.n() ? skips_[l] : skips_[l].slice(0, y.n());
      y = decoder_[l].forward(concat_channels(skip, up), mode);
    }
    y = output_conv_.forward(y, mode);
    if (cfg_.density_activation == DensityActivation::kSigmoid) y = out_sigmoid_.forward(y, mode);
    return y;
  }

  std::vector<T> classify_domain(const Tensor<T>& bottom, Mode mode, bool through_reversal = true) {
    Tensor<T> y = through_reversal ? grl_.forward(bottom, mode) : bottom;
    for (std::size_t s = 0; s < domain_convs_.size(); ++s) {
      y = domain_pools_[s].forward(domain_convs_[s].forward(y, mode), mode);
    }
    y = domain_sigmoid_.forward(gap_.forward(domain_out_.forward(y, mode), mode), mode);
    return {y.values().begin(), y.values().end()};
  }

  ModelConfig cfg_;
  std::vector<DoubleConv<T>> encoder_;
  std::vector<MaxPool2x2<T>> pools_;
  DoubleConv<T> bottleneck_;
  std::vector<ConvTranspose2x2<T>> ups_;
  std::vector<DoubleConv<T>> decoder_;
  Conv2d<T> output_conv_;
  Sigmoid<T> out_sigmoid_;

  GradientReversal<T> grl_;
  std::vector<ConvBnRelu<T>> domain_convs_;
  std::vector<MaxPool2x2<T>> domain_pools_;
  Conv2d<T> domain_out_;
  GlobalAvgPool<T> gap_;
  Sigmoid<T> domain_sigmoid_;

  std::vector<Tensor<T>> skips_;
  Shape bottom_shape_;
  bool density_ran_ = false;
  bool domain_ran_ = false;
};

}  // namespace dacount
