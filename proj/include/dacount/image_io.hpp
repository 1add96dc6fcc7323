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

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dacount/core.hpp"

namespace dacount {

/// Reads any 8/16-bit PNG as RGB and scales intensities to [0,1] (8-bit values / 255).
inline Image read_png(const std::filesystem::path& path, std::string id = {}) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
  Image out(h, w, id.empty() ? path.stem().string() : std::move(id));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        out.at(ch, r, c) = static_cast<float>(buf[(static_cast<std::size_t>(r) * w + c) * 3 + ch]) / 255.0f;
      }
    }
  }
  return out;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_png(const std::filesystem::path& path, const Image& image) {
  const int h = image.height(), w = image.width();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * 3);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        buf[(static_cast<std::size_t>(r) * w + c) * 3 + ch] = to_byte(image.at(ch, r, c));
      }
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

/// 8-bit grayscale; @p values are mapped linearly from [0, max] to [0, 255].
inline void write_gray_png(const std::filesystem::path& path, int height, int width, std::span<const double> values,
                           double max_value) {
  std::vector<std::uint8_t> buf(values.size());
  const double scale = max_value > 0.0 ? 1.0 / max_value : 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) buf[i] = to_byte(values[i] * scale);
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

/// Bilinear resampling with half-pixel centers (no corner alignment).
inline Image resize_bilinear(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  Image out(height, width, src.id());
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        const double top = src.at(ch, y0, x0) * (1 - wx) + src.at(ch, y0, x1) * wx;
        const double bot = src.at(ch, y1, x0) * (1 - wx) + src.at(ch, y1, x1) * wx;
        out.at(ch, r, c) = static_cast<float>(std::clamp(top * (1 - wy) + bot * wy, 0.0, 1.0));
      }
    }
  }
  return out;
}

/// Maps dot coordinates into a resized frame using the same half-pixel
/// convention as resize_bilinear, clamped to stay inside the new frame.
inline DotAnnotationSet rescale_dots(const DotAnnotationSet& dots, int src_h, int src_w, int height, int width) {
  DotAnnotationSet out{dots.image_id, {}};
  out.points.reserve(dots.points.size());
  const double sy = static_cast<double>(height) / src_h;
  const double sx = static_cast<double>(width) / src_w;
  const double max_r = std::nextafter(static_cast<double>(height), 0.0);
  const double max_c = std::nextafter(static_cast<double>(width), 0.0);
  for (const Dot& d : dots.points) {
    out.points.push_back({std::clamp((d.row + 0.5) * sy - 0.5, 0.0, max_r),
                          std::clamp((d.col + 0.5) * sx - 0.5, 0.0, max_c)});
  }
  return out;
}

}  // namespace dacount
