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

/// @file density.hpp
/// Ground-truth density rendering from dot annotations, and count recovery.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/core.hpp"

namespace dacount {

struct RenderOptions {
  /// Rescale each kernel so its in-frame part carries unit mass.
  bool renormalize_border_kernels = false;
};

/// Superposition of one unit-mass isotropic Gaussian per dot.
///
/// Each kernel is sampled on the integer grid within +-ceil(4 sigma) of the
/// dot's nearest pixel and normalized over that whole window, so a dot near
/// the border loses the part of its window that falls outside the frame
/// unless @p opts asks for renormalization.
inline DensityMap render_density(const DotAnnotationSet& dots, int height, int width, double sigma,
                                 RenderOptions opts = {}) {
  if (!(sigma > 0.0)) throw std::invalid_argument("render_density: sigma must be > 0");
  if (height < 1 || width < 1) throw std::invalid_argument("render_density: empty frame");
  dots.require_in_frame(height, width);

  DensityMap map(height, width, sigma);
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  const int span = 2 * radius + 1;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> gy(span), gx(span);

  for (const Dot& d : dots.points) {
    const int cr = static_cast<int>(std::floor(d.row + 0.5));
    const int cc = static_cast<int>(std::floor(d.col + 0.5));
    // The kernel is separable, so its mass is the product of the 1-D masses.
    double sy = 0.0, sx = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const double dy = cr + k - d.row;
      const double dx = cc + k - d.col;
      gy[k + radius] = std::exp(-dy * dy * inv_two_var);
      gx[k + radius] = std::exp(-dx * dx * inv_two_var);
      sy += gy[k + radius];
      sx += gx[k + radius];
    }
    const int r0 = std::max(0, cr - radius), r1 = std::min(height - 1, cr + radius);
    const int c0 = std::max(0, cc - radius), c1 = std::min(width - 1, cc + radius);
    double mass = sy * sx;
    if (opts.renormalize_border_kernels) {
      double in_y = 0.0, in_x = 0.0;
      for (int r = r0; r <= r1; ++r) in_y += gy[r - cr + radius];
      for (int c = c0; c <= c1; ++c) in_x += gx[c - cc + radius];
      mass = in_y * in_x;
    }
    const double scale = 1.0 / mass;
    for (int r = r0; r <= r1; ++r) {
      const double wy = gy[r - cr + radius] * scale;
      for (int c = c0; c <= c1; ++c) map.at(r, c) += wy * gx[c - cc + radius];
    }
  }
  return map;
}

/// Sum over all pixels.
inline double count_from_density(const DensityMap& m) {
  const auto v = m.values();
  return std::accumulate(v.begin(), v.end(), 0.0);
}

/// Nearest integer to a (clamped nonnegative) real count, ties away from zero.
inline std::int64_t round_count(double c) { return std::llround(std::max(0.0, c)); }

inline std::int64_t integer_count(const DensityMap& m) { return round_count(count_from_density(m)); }

/// Exact little-endian-native binary form: "DMAP", version, h, w, sigma (NaN if absent), values.
inline void save_density_map(const std::string& path, const DensityMap& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write("DMAP", 4);
  detail::write_pod<std::uint32_t>(os, 1);
  detail::write_pod<std::int32_t>(os, m.height());
  detail::write_pod<std::int32_t>(os, m.width());
  detail::write_pod<double>(os, m.sigma().value_or(std::numeric_limits<double>::quiet_NaN()));
  const auto v = m.values();
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (!os) throw IoError("failed writing '" + path + "'");
}

inline DensityMap load_density_map(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "DMAP") throw IoError("'" + path + "' is not a density map file");
  if (detail::read_pod<std::uint32_t>(is) != 1) throw IoError("unsupported density map version in '" + path + "'");
  const auto h = detail::read_pod<std::int32_t>(is);
  const auto w = detail::read_pod<std::int32_t>(is);
  const auto sigma = detail::read_pod<double>(is);
  if (h < 1 || w < 1) throw IoError("corrupt density map dimensions in '" + path + "'");
  DensityMap m(h, w, std::isnan(sigma) ? std::nullopt : std::optional<double>(sigma));
  auto v = m.values();
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (!is) throw IoError("truncated density map '" + path + "'");
  return m;
}

}  // namespace dacount
