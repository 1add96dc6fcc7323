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

/// @file datasets.hpp
/// Dataset ingestion and transformation.
///
/// On-disk layout of a dataset directory:
///
///     <dir>/images/<id>.png
///     <dir>/annotations.csv   optional; header `image_id,x,y`, one row per dot,
///                             x = column, y = row, in pixels
///     <dir>/manifest.tsv      header `id<TAB>path<TAB>annotated`
///
/// Images are read in lexicographic order of their id (file stem).

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/core.hpp"
#include "dacount/image_io.hpp"

namespace dacount {

namespace fs = std::filesystem;

inline constexpr const char* kAnnotationHeader = "image_id,x,y";
inline constexpr const char* kManifestHeader = "id\tpath\tannotated";

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_coord(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Parses an annotation file into image id -> dots. Malformed rows are
/// rejected with their 1-based line number.
inline std::map<std::string, std::vector<Dot>> read_annotations(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open annotation file '" + path.string() + "'");
  std::map<std::string, std::vector<Dot>> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char ch : t) {
        if (ch != ' ') compact += ch;
      }
      if (compact != kAnnotationHeader) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected header '" + kAnnotationHeader + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
    if (fields.size() != 3 || fields[0].empty()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed row, expected 'image_id,x,y'");
    }
    const auto x = detail::parse_double(fields[1]);
    const auto y = detail::parse_double(fields[2]);
    if (!x || !y) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric coordinate in '" + t + "'");
    }
    out[fields[0]].push_back({*y, *x});
  }
  if (!header_seen) throw IoError("annotation file '" + path.string() + "' is empty");
  return out;
}

/// Writes annotations for every labeled sample of @p d.
inline void write_annotations(const fs::path& path, const Dataset& d) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write annotation file '" + path.string() + "'");
  os << kAnnotationHeader << '\n';
  for (const Sample& s : d.samples) {
    if (!s.dots) continue;
    for (const Dot& dot : s.dots->points) {
      os << s.image.id() << ',' << detail::format_coord(dot.col) << ',' << detail::format_coord(dot.row) << '\n';
    }
  }
}

/// One Sample per PNG in @p image_dir, ordered by id. With @p annotations,
/// every image gets a (possibly empty) dot set.
inline Dataset load_dataset(const fs::path& image_dir, const std::optional<fs::path>& annotations, DomainTag domain,
                            std::string name = {}) {
  if (!fs::is_directory(image_dir)) throw IoError("image directory '" + image_dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(image_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });

  std::map<std::string, std::vector<Dot>> dots;
  if (annotations) {
    dots = read_annotations(*annotations);
    std::vector<std::string> missing;
    for (const auto& [id, pts] : dots) {
      const bool found = std::any_of(files.begin(), files.end(), [&](const fs::path& p) { return p.stem() == id; });
      if (!found) missing.push_back(id);
    }
    if (!missing.empty()) {
      std::string msg = "annotations reference missing images:";
      for (const auto& m : missing) msg += " " + m;
      throw IoError(msg);
    }
  }

  Dataset d{name.empty() ? image_dir.parent_path().filename().string() : std::move(name), {}};
  for (const auto& f : files) {
    Sample s;
    s.image = read_png(f);
    s.domain = domain;
    if (annotations) {
      DotAnnotationSet set{s.image.id(), {}};
      if (auto it = dots.find(s.image.id()); it != dots.end()) set.points = it->second;
      s.dots = std::move(set);
    }
    s.validate();
    d.samples.push_back(std::move(s));
  }
  return d;
}

struct ManifestEntry {
  std::string id;
  std::string path;
  bool annotated = false;
};

inline std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest '" + path.string() + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1) {
      if (detail::trim(line) != kManifestHeader) throw IoError(path.string() + ":1: bad manifest header");
      continue;
    }
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) f.push_back(detail::trim(cell));
    if (f.size() != 3 || (f[2] != "0" && f[2] != "1")) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed manifest row");
    }
    out.push_back({f[0], f[1], f[2] == "1"});
  }
  return out;
}

/// Writes images, annotations (for labeled datasets) and the manifest.
inline void write_dataset(const fs::path& dir, const Dataset& d) {
  fs::create_directories(dir / "images");
  const bool labeled = !d.empty() && d.all_labeled();
  std::ofstream manifest(dir / "manifest.tsv");
  if (!manifest) throw IoError("cannot write manifest in '" + dir.string() + "'");
  manifest << kManifestHeader << '\n';
  for (const Sample& s : d.samples) {
    const fs::path rel = fs::path("images") / (s.image.id() + ".png");
    write_png(dir / rel, s.image);
    manifest << s.image.id() << '\t' << rel.string() << '\t' << (s.dots ? 1 : 0) << '\n';
  }
  if (labeled) write_annotations(dir / "annotations.csv", d);
}

/// Loads a dataset directory written by write_dataset (or laid out the same way).
inline Dataset load_dataset_dir(const fs::path& dir, DomainTag domain) {
  const fs::path ann = dir / "annotations.csv";
  return load_dataset(dir / "images", fs::exists(ann) ? std::optional<fs::path>(ann) : std::nullopt, domain,
                      dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string());
}

inline Image crop(const Image& src, int top, int left, int height, int width, std::string id) {
  Image out(height, width, std::move(id));
  for (int ch = 0; ch < Image::kChannels; ++ch) {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) out.at(ch, r, c) = src.at(ch, top + r, left + c);
    }
  }
  return out;
}

/// Dots whose center lies in [top, top+height) x [left, left+width), translated.
inline DotAnnotationSet crop_dots(const DotAnnotationSet& dots, int top, int left, int height, int width,
                                  std::string id) {
  DotAnnotationSet out{std::move(id), {}};
  for (const Dot& d : dots.points) {
    if (d.row >= top && d.row < top + height && d.col >= left && d.col < left + width) {
      out.points.push_back({d.row - top, d.col - left});
    }
  }
  return out;
}

/// Square patches sampled with replacement, uniformly over every valid
/// (image, top-left corner) pair of the dataset.
inline Dataset extract_patches(const Dataset& d, int patch, int count, std::uint64_t seed) {
  if (d.empty()) throw std::invalid_argument("extract_patches: empty dataset");
  if (count < 1) throw std::invalid_argument("extract_patches: count must be >= 1");
  if (patch < 1) throw std::invalid_argument("extract_patches: patch size must be >= 1");
  std::vector<double> weights;
  for (const Sample& s : d.samples) {
    if (patch > s.image.height() || patch > s.image.width()) {
      throw std::invalid_argument("extract_patches: patch " + std::to_string(patch) + " exceeds image '" +
                                  s.image.id() + "' (" + std::to_string(s.image.height()) + "x" +
                                  std::to_string(s.image.width()) + ")");
    }
    weights.push_back(static_cast<double>(s.image.height() - patch + 1) * (s.image.width() - patch + 1));
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick_image(weights.begin(), weights.end());
  Dataset out{d.name + "/patches", {}};
  const int digits = static_cast<int>(std::to_string(count - 1).size());
  for (int k = 0; k < count; ++k) {
    const Sample& s = d.samples[pick_image(rng)];
    std::uniform_int_distribution<int> pick_top(0, s.image.height() - patch);
    std::uniform_int_distribution<int> pick_left(0, s.image.width() - patch);
    const int top = pick_top(rng);
    const int left = pick_left(rng);
    std::ostringstream id;
    id << s.image.id() << "_p" << std::setw(digits) << std::setfill('0') << k;
    Sample p;
    p.domain = s.domain;
    p.image = crop(s.image, top, left, patch, patch, id.str());
    if (s.dots) p.dots = crop_dots(*s.dots, top, left, patch, patch, id.str());
    out.samples.push_back(std::move(p));
  }
  return out;
}

/// Member indices of each composite: @p cells samples drawn without
/// replacement when the dataset is large enough, with replacement otherwise.
inline std::vector<std::vector<std::size_t>> plan_composites(std::size_t dataset_size, int cells, int count,
                                                             std::uint64_t seed) {
  if (dataset_size == 0) throw std::invalid_argument("make_composites: empty dataset");
  if (count < 1) throw std::invalid_argument("make_composites: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> plan;
  std::uniform_int_distribution<std::size_t> pick(0, dataset_size - 1);
  for (int k = 0; k < count; ++k) {
    std::vector<std::size_t> members;
    while (static_cast<int>(members.size()) < cells) {
      const std::size_t i = pick(rng);
      const bool dup = std::find(members.begin(), members.end(), i) != members.end();
      if (dup && dataset_size >= static_cast<std::size_t>(cells)) continue;
      members.push_back(i);
    }
    plan.push_back(std::move(members));
  }
  return plan;
}

/// Tiles randomly chosen samples into a @p rows x @p cols grid (row-major).
inline Dataset make_composites(const Dataset& d, int rows, int cols, int count, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("make_composites: grid must be at least 1x1");
  if (d.empty()) throw std::invalid_argument("make_composites: empty dataset");
  const int h = d.samples.front().image.height(), w = d.samples.front().image.width();
  for (const Sample& s : d.samples) {
    if (s.image.height() != h || s.image.width() != w) {
      throw std::invalid_argument("make_composites: image '" + s.image.id() + "' is " +
                                  std::to_string(s.image.height()) + "x" + std::to_string(s.image.width()) +
                                  ", expected " + std::to_string(h) + "x" + std::to_string(w));
    }
  }
  const auto plan = plan_composites(d.size(), rows * cols, count, seed);
  Dataset out{d.name + "/composites", {}};
  const int digits = static_cast<int>(std::to_string(count - 1).size());
  for (int k = 0; k < count; ++k) {
    std::ostringstream id;
    id << "composite_" << std::setw(digits) << std::setfill('0') << k;
    Sample c;
    c.domain = d.samples.front().domain;
    c.image = Image(rows * h, cols * w, id.str());
    bool labeled = true;
    DotAnnotationSet dots{id.str(), {}};
    for (int cell = 0; cell < rows * cols; ++cell) {
      const Sample& s = d.samples[plan[k][cell]];
      const int top = (cell / cols) * h, left = (cell % cols) * w;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        for (int r = 0; r < h; ++r) {
          for (int cc = 0; cc < w; ++cc) c.image.at(ch, top + r, left + cc) = s.image.at(ch, r, cc);
        }
      }
      if (s.dots) {
        for (const Dot& p : s.dots->points) dots.points.push_back({p.row + top, p.col + left});
      } else {
        labeled = false;
      }
    }
    if (labeled) c.dots = std::move(dots);
    out.samples.push_back(std::move(c));
  }
  return out;
}

/// Parameters of the synthetic domain-shift benchmark.
struct SyntheticSpec {
  int image_size = 64;
  int min_count = 3;
  int max_count = 12;
  double blob_radius = 3.0;
  double shift_strength = 0.7;  ///< 0 = target drawn like source, 1 = strongest shift
  double noise_level = 0.03;
  int source_count = 200;
  int target_count = 200;
  int target_test_count = 50;

  void validate() const {
    if (min_count > max_count) throw std::invalid_argument("synthetic spec: min count exceeds max count");
    if (min_count < 1) throw std::invalid_argument("synthetic spec: min count must be >= 1");
    if (blob_radius < 1.0) throw std::invalid_argument("synthetic spec: blob_radius must be >= 1");
    if (!(shift_strength >= 0.0 && shift_strength <= 1.0)) {
      throw std::invalid_argument("synthetic spec: shift_strength must lie in [0,1]");
    }
    if (!(noise_level >= 0.0)) throw std::invalid_argument("synthetic spec: noise_level must be >= 0");
    if (image_size < 4 * blob_radius) throw std::invalid_argument("synthetic spec: image too small for the blobs");
    if (source_count < 0 || target_count < 0 || target_test_count < 0) {
      throw std::invalid_argument("synthetic spec: dataset sizes must be >= 0");
    }
  }
};

struct SyntheticBenchmark {
  Dataset source;
  Dataset target;       ///< unlabeled
  Dataset target_test;  ///< labeled, evaluation only
};

namespace detail {

/// Separable Gaussian blur, edges clamped.
inline void blur_image(Image& img, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) s += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= s;
  const int h = img.height(), w = img.width();
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int ch = 0; ch < Image::kChannels; ++ch) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(ch, r, std::clamp(c + i, 0, w - 1));
        tmp[static_cast<std::size_t>(r) * w + c] = acc;
      }
    }
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp[static_cast<std::size_t>(std::clamp(r + i, 0, h - 1)) * w + c];
        }
        img.at(ch, r, c) = static_cast<float>(acc);
      }
    }
  }
}

/// Renders one synthetic image. Every random draw happens regardless of
/// @p shift, so shift = 0 follows exactly the source generator path.
inline Sample render_synthetic(const SyntheticSpec& spec, double shift, DomainTag domain, bool keep_dots,
                               std::string id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = spec.image_size;
  const double r0 = spec.blob_radius;

  std::uniform_int_distribution<int> pick_count(spec.min_count, spec.max_count);
  const int k = pick_count(rng);

  // Object centers, loosely separated.
  std::vector<Dot> centers;
  const double margin = r0;
  for (int i = 0; i < k; ++i) {
    Dot best{};
    for (int attempt = 0; attempt < 100; ++attempt) {
      Dot cand{margin + u01(rng) * (n - 2 * margin), margin + u01(rng) * (n - 2 * margin)};
      best = cand;
      const bool clear = std::all_of(centers.begin(), centers.end(), [&](const Dot& o) {
        return std::hypot(o.row - cand.row, o.col - cand.col) >= 1.6 * r0;
      });
      if (clear) break;
    }
    centers.push_back(best);
  }

  // Appearance draws (always consumed).
  const std::array<double, 3> bg_jitter{0.04 * gauss(rng), 0.04 * gauss(rng), 0.04 * gauss(rng)};
  const std::array<double, 3> fg_jitter{0.04 * gauss(rng), 0.04 * gauss(rng), 0.04 * gauss(rng)};
  struct Wave {
    double fy, fx, phase;
  };
  std::array<Wave, 4> waves{};
  for (Wave& wv : waves) {
    const double freq = 0.08 + 0.25 * u01(rng);
    const double angle = std::numbers::pi * u01(rng);
    wv = {freq * std::sin(angle), freq * std::cos(angle), 2.0 * std::numbers::pi * u01(rng)};
  }
  struct Clutter {
    double row, col, radius, tone;
  };
  std::vector<Clutter> clutter(6);
  for (Clutter& c : clutter) c = {u01(rng) * n, u01(rng) * n, 1.5 * r0 + 3.0 * r0 * u01(rng), u01(rng)};

  const std::array<double, 3> bg_base{0.20, 0.26, 0.14};
  const std::array<double, 3> fg_base{0.88, 0.78, 0.30};
  // Target appearance: warm, washed-out field light with low object contrast.
  const std::array<double, 3> bg_shift{0.58, 0.50, 0.40};
  const std::array<double, 3> fg_shift{0.72, 0.80, 0.62};

  Image img(n, n, id);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double texture = 0.0;
      for (const Wave& wv : waves) texture += std::sin(wv.fy * r + wv.fx * c + wv.phase);
      texture /= static_cast<double>(waves.size());
      double clutter_tone = 0.0;
      for (const Clutter& cl : clutter) {
        const double d2 = ((r - cl.row) * (r - cl.row) + (c - cl.col) * (c - cl.col)) / (cl.radius * cl.radius);
        clutter_tone += (cl.tone - 0.5) * std::exp(-d2);
      }
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        const double base = (1.0 - shift) * bg_base[ch] + shift * bg_shift[ch] + bg_jitter[ch];
        img.at(ch, r, c) = static_cast<float>(base + shift * (0.12 * texture + 0.25 * clutter_tone));
      }
    }
  }

  const double aspect = 1.0 + 0.8 * shift;
  for (const Dot& p : centers) {
    const double radius = r0 * (0.85 + 0.3 * u01(rng));
    const double theta = std::numbers::pi * u01(rng);
    const double ry = radius * std::sqrt(aspect), rx = radius / std::sqrt(aspect);
    const double ct = std::cos(theta), st = std::sin(theta);
    const int reach = static_cast<int>(std::ceil(ry + 2));
    for (int r = std::max(0, static_cast<int>(p.row) - reach); r <= std::min(n - 1, static_cast<int>(p.row) + reach); ++r) {
      for (int c = std::max(0, static_cast<int>(p.col) - reach); c <= std::min(n - 1, static_cast<int>(p.col) + reach);
           ++c) {
        const double dy = r - p.row, dx = c - p.col;
        const double u = (ct * dy + st * dx) / ry;
        const double v = (-st * dy + ct * dx) / rx;
        const double dist = std::sqrt(u * u + v * v);
        const double alpha = 1.0 / (1.0 + std::exp((dist - 1.0) * 6.0));
        for (int ch = 0; ch < Image::kChannels; ++ch) {
          const double fg = (1.0 - shift) * fg_base[ch] + shift * fg_shift[ch] + fg_jitter[ch];
          img.at(ch, r, c) = static_cast<float>((1.0 - alpha) * img.at(ch, r, c) + alpha * fg);
        }
      }
    }
  }

  blur_image(img, 1.2 * shift);
  const double noise = spec.noise_level * (1.0 + shift);
  for (float& v : img.pixels()) {
    const double noisy = v + noise * gauss(rng);
    // Quantize to 8-bit levels so images survive a PNG round trip unchanged.
    v = static_cast<float>(std::lround(std::clamp(noisy, 0.0, 1.0) * 255.0)) / 255.0f;
  }

  Sample s;
  s.image = std::move(img);
  s.domain = domain;
  if (keep_dots) s.dots = DotAnnotationSet{s.image.id(), std::move(centers)};
  return s;
}

inline std::string indexed_id(const std::string& prefix, int i) {
  std::ostringstream os;
  os << prefix << '_' << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

}  // namespace detail

/// Source, unlabeled target and labeled target-test sets, deterministic in @p seed.
inline SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticBenchmark b;
  b.source.name = "source";
  b.target.name = "target";
  b.target_test.name = "target_test";
  const auto stream = [&](std::uint64_t which, int i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(which), static_cast<std::uint32_t>(i)};
    return std::mt19937_64(seq);
  };
  for (int i = 0; i < spec.source_count; ++i) {
    auto rng = stream(0, i);
    b.source.samples.push_back(
        detail::render_synthetic(spec, 0.0, DomainTag::kSource, true, detail::indexed_id("src", i), rng));
  }
  for (int i = 0; i < spec.target_count; ++i) {
    auto rng = stream(1, i);
    b.target.samples.push_back(detail::render_synthetic(spec, spec.shift_strength, DomainTag::kTarget, false,
                                                        detail::indexed_id("tgt", i), rng));
  }
  for (int i = 0; i < spec.target_test_count; ++i) {
    auto rng = stream(2, i);
    b.target_test.samples.push_back(detail::render_synthetic(spec, spec.shift_strength, DomainTag::kTarget, true,
                                                             detail::indexed_id("test", i), rng));
  }
  return b;
}

}  // namespace dacount
