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

/// @file core.hpp
/// Domain types shared by every module: images, dot annotations, density
/// maps, domain tags, samples and datasets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dacount {

/// Raised when a loss becomes non-finite during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed files, missing paths and other I/O failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Three-channel image stored planar (channel, row, col), values in [0,1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;

  Image(int height, int width, std::string id = {})
      : height_(height), width_(width), id_(std::move(id)) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("image dimensions must be at least 1x1, got " +
                                  std::to_string(height) + "x" + std::to_string(width));
    }
    pixels_.assign(static_cast<std::size_t>(kChannels) * height * width, 0.0f);
  }

  Image(int height, int width, std::vector<float> pixels, std::string id = {})
      : height_(height), width_(width), id_(std::move(id)), pixels_(std::move(pixels)) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("image dimensions must be at least 1x1");
    }
    if (pixels_.size() != static_cast<std::size_t>(kChannels) * height * width) {
      throw std::invalid_argument("pixel buffer size does not match 3 x height x width");
    }
    for (float v : pixels_) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw std::invalid_argument("pixel intensity outside [0,1] in image '" + id_ + "'");
      }
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  float at(int c, int row, int col) const { return pixels_[index(c, row, col)]; }
  float& at(int c, int row, int col) { return pixels_[index(c, row, col)]; }

  std::span<const float> pixels() const { return pixels_; }
  std::span<float> pixels() { return pixels_; }

  /// Clamps every value into [0,1]; used after synthetic rendering.
  void clamp() {
    for (float& v : pixels_) v = std::clamp(v, 0.0f, 1.0f);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int c, int row, int col) const {
    return (static_cast<std::size_t>(c) * height_ + row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  std::string id_;
  std::vector<float> pixels_;
};

struct Dot {
  double row = 0.0;
  double col = 0.0;
  friend bool operator==(const Dot&, const Dot&) = default;
};

/// Point annotations for one image, one dot per object instance.
struct DotAnnotationSet {
  std::string image_id;
  std::vector<Dot> points;

  std::size_t count() const { return points.size(); }

  bool in_frame(int height, int width) const {
    return std::all_of(points.begin(), points.end(), [&](const Dot& d) {
      return d.row >= 0.0 && d.row < height && d.col >= 0.0 && d.col < width;
    });
  }

  void require_in_frame(int height, int width) const {
    for (const Dot& d : points) {
      if (!(d.row >= 0.0 && d.row < height && d.col >= 0.0 && d.col < width)) {
        throw std::invalid_argument("dot (row=" + std::to_string(d.row) +
                                    ", col=" + std::to_string(d.col) + ") of image '" +
                                    image_id + "' lies outside the " + std::to_string(height) +
                                    "x" + std::to_string(width) + " frame");
      }
    }
  }

  friend bool operator==(const DotAnnotationSet&, const DotAnnotationSet&) = default;
};

/// Row-major 2-D grid of reals whose sum encodes a count.
class DensityMap {
 public:
  DensityMap() = default;
  DensityMap(int height, int width, std::optional<double> sigma = std::nullopt)
      : height_(height), width_(width), sigma_(sigma) {
    if (height < 1 || width < 1) throw std::invalid_argument("density map must be at least 1x1");
    if (sigma && !(*sigma > 0.0)) throw std::invalid_argument("density sigma must be > 0");
    values_.assign(static_cast<std::size_t>(height) * width, 0.0);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::optional<double> sigma() const { return sigma_; }

  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * width_ + col]; }
  double& at(int row, int col) { return values_[static_cast<std::size_t>(row) * width_ + col]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  friend bool operator==(const DensityMap&, const DensityMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::optional<double> sigma_;
  std::vector<double> values_;
};

enum class DomainTag : std::uint8_t { kSource = 0, kTarget = 1 };

inline const char* to_string(DomainTag tag) { return tag == DomainTag::kSource ? "source" : "target"; }

struct Sample {
  Image image;
  std::optional<DotAnnotationSet> dots;
  DomainTag domain = DomainTag::kSource;

  /// Source samples must carry dots, and dots must fit the frame.
  void validate() const {
    if (domain == DomainTag::kSource && !dots) {
      throw std::invalid_argument("source sample '" + image.id() + "' has no dot annotations");
    }
    if (dots) dots->require_in_frame(image.height(), image.width());
  }

  bool labeled() const { return dots.has_value(); }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// All samples share one tag; every sample satisfies its own invariants.
  void validate() const {
    for (const Sample& s : samples) {
      s.validate();
      if (s.domain != samples.front().domain) {
        throw std::invalid_argument("dataset '" + name + "' mixes source and target samples");
      }
    }
  }

  bool all_labeled() const {
    return std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.labeled(); });
  }
};

/// Returns a copy of @p d with all dot annotations removed.
inline Dataset strip_labels(Dataset d) {
  for (Sample& s : d.samples) s.dots.reset();
  return d;
}

/// Deterministic random partition; the first part holds round(fraction * |d|) samples.
inline std::pair<Dataset, Dataset> split_train_val(const Dataset& d, double fraction,
                                                   std::uint64_t seed) {
  if (d.empty()) {
    throw std::invalid_argument("cannot split dataset '" + d.name + "': it has no samples");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = d.size();
  const auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw; std::shuffle is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());

  Dataset a{d.name + "/train", {}};
  Dataset b{d.name + "/val", {}};
  for (std::size_t i = 0; i < n; ++i) {
    (i < first ? a : b).samples.push_back(d.samples[order[i]]);
  }
  return {std::move(a), std::move(b)};
}

namespace detail {

template <typename V>
void write_pod(std::ostream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw IoError("unexpected end of stream");
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (1ull << 30)) throw IoError("corrupt string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw IoError("unexpected end of stream");
  return s;
}

}  // namespace detail

/// Binary sample record (native endianness); exact for pixels, dots and tags.
inline void write_sample(std::ostream& os, const Sample& s) {
  os.write("DSMP", 4);
  detail::write_pod<std::uint32_t>(os, 1);
  detail::write_string(os, s.image.id());
  detail::write_pod<std::int32_t>(os, s.image.height());
  detail::write_pod<std::int32_t>(os, s.image.width());
  const auto px = s.image.pixels();
  os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size_bytes()));
  detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(s.domain));
  detail::write_pod<std::uint8_t>(os, s.dots ? 1 : 0);
  if (s.dots) {
    detail::write_string(os, s.dots->image_id);
    detail::write_pod<std::uint64_t>(os, s.dots->points.size());
    for (const Dot& d : s.dots->points) {
      detail::write_pod(os, d.row);
      detail::write_pod(os, d.col);
    }
  }
}

inline Sample read_sample(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "DSMP") throw IoError("not a sample record");
  if (detail::read_pod<std::uint32_t>(is) != 1) throw IoError("unsupported sample record version");
  Sample s;
  std::string id = detail::read_string(is);
  const auto h = detail::read_pod<std::int32_t>(is);
  const auto w = detail::read_pod<std::int32_t>(is);
  if (h < 1 || w < 1 || static_cast<std::int64_t>(h) * w > (1ll << 28)) {
    throw IoError("corrupt image dimensions in sample record");
  }
  std::vector<float> px(static_cast<std::size_t>(Image::kChannels) * h * w);
  is.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size() * sizeof(float)));
  if (!is) throw IoError("truncated pixel data in sample record");
  s.image = Image(h, w, std::move(px), std::move(id));
  const auto tag = detail::read_pod<std::uint8_t>(is);
  if (tag > 1) throw IoError("invalid domain tag in sample record");
  s.domain = static_cast<DomainTag>(tag);
  if (detail::read_pod<std::uint8_t>(is) != 0) {
    DotAnnotationSet dots;
    dots.image_id = detail::read_string(is);
    const auto n = detail::read_pod<std::uint64_t>(is);
    dots.points.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      Dot d;
      d.row = detail::read_pod<double>(is);
      d.col = detail::read_pod<double>(is);
      dots.points.push_back(d);
    }
    s.dots = std::move(dots);
  }
  s.validate();
  return s;
}

}  // namespace dacount
