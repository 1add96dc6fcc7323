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

/// @file trainer.hpp
/// Joint training: every batch mixes labeled source images (density loss)
/// with unlabeled target images (domain loss through the reversal layer).
/// With adaptation disabled the domain head does not exist and batches hold
/// source images only.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacount/core.hpp"
#include "dacount/density.hpp"
#include "dacount/image_io.hpp"
#include "dacount/network.hpp"
#include "dacount/objective.hpp"
#include "dacount/optim.hpp"

namespace dacount {

namespace fs = std::filesystem;

/// Bumped whenever TrainConfig or the checkpoint layout changes meaning.
inline constexpr int kConfigVersion = 1;

/// A configuration key or value the trainer cannot accept.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct TrainConfig {
  int batch_size = 8;
  int image_size = 256;
  double lr_encoder_decoder = 1e-3;
  double lr_domain_head = 1e-4;
  int epochs = 150;
  double val_fraction = 0.2;
  double sigma = 1.0;
  double gamma = 10.0;
  std::uint64_t seed = 0;
  DensityActivation density_activation = DensityActivation::kSigmoid;
  bool adaptation_enabled = true;
  int source_per_batch = 4;

  int depth = 4;
  int base_width = 64;
  int domain_width = 256;
  int domain_stages = -1;
  bool renormalize_border_kernels = false;
  int keep_last_checkpoints = 0;  ///< 0 keeps every epoch checkpoint

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
    if (source_per_batch < 1 || source_per_batch > batch_size) {
      throw ConfigError("source_per_batch", "must satisfy 0 < source_per_batch <= batch_size");
    }
    if (adaptation_enabled && source_per_batch == batch_size) {
      throw ConfigError("source_per_batch", "leaves no room for target images while adaptation is enabled");
    }
    if (!(lr_encoder_decoder > 0.0)) throw ConfigError("lr_encoder_decoder", "must be > 0");
    if (!(lr_domain_head > 0.0)) throw ConfigError("lr_domain_head", "must be > 0");
    if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction", "must lie in (0,1)");
    if (!(sigma > 0.0)) throw ConfigError("sigma", "must be > 0");
    if (!(gamma > 0.0)) throw ConfigError("gamma", "must be > 0");
    if (keep_last_checkpoints < 0) throw ConfigError("keep_last_checkpoints", "must be >= 0");
    try {
      model_config().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("image_size/depth/base_width", e.what());
    }
  }

  ModelConfig model_config() const {
    ModelConfig m;
    m.depth = depth;
    m.base_width = base_width;
    m.domain_width = domain_width;
    m.domain_stages = domain_stages;
    m.image_size = image_size;
    m.density_activation = density_activation;
    m.domain_head = adaptation_enabled;
    m.seed = seed;
    return m;
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"config_version", kConfigVersion},
      {"batch_size", c.batch_size},
      {"image_size", c.image_size},
      {"lr_encoder_decoder", c.lr_encoder_decoder},
      {"lr_domain_head", c.lr_domain_head},
      {"epochs", c.epochs},
      {"val_fraction", c.val_fraction},
      {"sigma", c.sigma},
      {"gamma", c.gamma},
      {"seed", c.seed},
      {"density_activation", to_string(c.density_activation)},
      {"adaptation_enabled", c.adaptation_enabled},
      {"source_per_batch", c.source_per_batch},
      {"depth", c.depth},
      {"base_width", c.base_width},
      {"domain_width", c.domain_width},
      {"domain_stages", c.domain_stages},
      {"renormalize_border_kernels", c.renormalize_border_kernels},
      {"keep_last_checkpoints", c.keep_last_checkpoints},
  };
}

/// Overlays the keys present in @p j onto @p base. Unknown keys are rejected.
inline TrainConfig merge_config(TrainConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "config_version") {
        if (value.get<int>() != kConfigVersion) {
          throw ConfigError(key, "version " + value.dump() + " is not supported (expected " +
                                     std::to_string(kConfigVersion) + ")");
        }
      } else if (key == "batch_size") {
        base.batch_size = value.get<int>();
      } else if (key == "image_size") {
        base.image_size = value.get<int>();
      } else if (key == "lr_encoder_decoder") {
        base.lr_encoder_decoder = value.get<double>();
      } else if (key == "lr_domain_head") {
        base.lr_domain_head = value.get<double>();
      } else if (key == "epochs") {
        base.epochs = value.get<int>();
      } else if (key == "val_fraction") {
        base.val_fraction = value.get<double>();
      } else if (key == "sigma") {
        base.sigma = value.get<double>();
      } else if (key == "gamma") {
        base.gamma = value.get<double>();
      } else if (key == "seed") {
        base.seed = value.get<std::uint64_t>();
      } else if (key == "density_activation") {
        const auto s = value.get<std::string>();
        if (s == "sigmoid") {
          base.density_activation = DensityActivation::kSigmoid;
        } else if (s == "linear") {
          base.density_activation = DensityActivation::kLinear;
        } else {
          throw ConfigError(key, "expected 'sigmoid' or 'linear', got '" + s + "'");
        }
      } else if (key == "adaptation_enabled") {
        base.adaptation_enabled = value.get<bool>();
      } else if (key == "source_per_batch") {
        base.source_per_batch = value.get<int>();
      } else if (key == "depth") {
        base.depth = value.get<int>();
      } else if (key == "base_width") {
        base.base_width = value.get<int>();
      } else if (key == "domain_width") {
        base.domain_width = value.get<int>();
      } else if (key == "domain_stages") {
        base.domain_stages = value.get<int>();
      } else if (key == "renormalize_border_kernels") {
        base.renormalize_border_kernels = value.get<bool>();
      } else if (key == "keep_last_checkpoints") {
        base.keep_last_checkpoints = value.get<int>();
      } else {
        throw ConfigError(key, "unknown configuration key");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, std::string("wrong value type: ") + e.what());
    }
  }
  return base;
}

inline TrainConfig config_from_json(const nlohmann::json& j) { return merge_config(TrainConfig{}, j); }

using Model = CountingModel<float>;

/// Model described by @p cfg; the domain head exists only when adaptation is enabled.
inline Model build_model(const TrainConfig& cfg) {
  cfg.validate();
  return Model(cfg.model_config());
}

struct EpochRecord {
  int epoch = 0;
  double density_loss = 0.0;  ///< mean over the epoch's iterations
  double domain_loss = 0.0;
  double total = 0.0;
  double val_loss = 0.0;      ///< density loss on the held-out source split; NaN if that split is empty
  double mean_lambda = 0.0;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"epoch", r.epoch},       {"density_loss", num(r.density_loss)}, {"domain_loss", num(r.domain_loss)},
          {"total", num(r.total)},  {"val_loss", num(r.val_loss)},         {"mean_lambda", r.mean_lambda}};
}

/// What the data loader put into one training batch.
struct BatchInfo {
  std::int64_t iteration = 0;
  int source_count = 0;
  int target_count = 0;
  double lambda = 0.0;
  std::vector<std::size_t> source_indices;  ///< into the training split
  std::vector<std::size_t> target_indices;
};

struct TrainState {
  Model model;
  std::int64_t iteration = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  std::vector<double> lambda_trace;  ///< lambda used at each iteration
};

struct TrainOptions {
  std::optional<fs::path> run_dir;  ///< if set, must already exist
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const BatchInfo&)> on_batch;
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

/// Images resized to the training resolution and density targets rendered
/// from dots rescaled into that frame.
struct PreparedSet {
  Tensor<float> images;
  Tensor<float> targets;  ///< empty for unlabeled sets
};

inline PreparedSet prepare(const Dataset& d, const TrainConfig& cfg, bool with_targets) {
  PreparedSet p;
  const int s = cfg.image_size;
  const int n = static_cast<int>(d.size());
  if (n == 0) return p;
  p.images = Tensor<float>(n, Image::kChannels, s, s);
  if (with_targets) p.targets = Tensor<float>(n, 1, s, s);
  for (int i = 0; i < n; ++i) {
    const Sample& smp = d.samples[i];
    const Image img = resize_bilinear(smp.image, s, s);
    std::copy(img.pixels().begin(), img.pixels().end(), p.images.sample(i));
    if (with_targets) {
      if (!smp.dots) throw std::invalid_argument("source sample '" + smp.image.id() + "' is unlabeled");
      const auto dots = rescale_dots(*smp.dots, smp.image.height(), smp.image.width(), s, s);
      const auto map = render_density(dots, s, s, cfg.sigma, {cfg.renormalize_border_kernels});
      std::transform(map.values().begin(), map.values().end(), p.targets.sample(i),
                     [](double v) { return static_cast<float>(v); });
    }
  }
  return p;
}

inline void copy_sample(const Tensor<float>& from, std::size_t index, Tensor<float>& to, int slot) {
  const std::size_t sz = from.shape().sample_size();
  std::copy(from.sample(static_cast<int>(index)), from.sample(static_cast<int>(index)) + sz, to.sample(slot));
}

/// Density loss over a whole prepared set, evaluated in batches.
inline double evaluate_density_loss(Model& model, const PreparedSet& set, int batch_size) {
  const int n = set.images.n();
  double sse = 0.0;
  std::size_t count = 0;
  for (int b = 0; b < n; b += batch_size) {
    const int e = std::min(n, b + batch_size);
    const Tensor<float> pred = model.forward_density(set.images.slice(b, e), Mode::kEval);
    const float* t = set.targets.sample(b);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double err = static_cast<double>(pred.data()[i]) - t[i];
      sse += err * err;
    }
    count += pred.size();
  }
  return std::log(kLogMseEpsilon + sse / static_cast<double>(count));
}

}  // namespace detail

inline constexpr char kCheckpointMagic[4] = {'D', 'A', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointFormat = 1;

/// Parameters, normalization buffers, optimizer state, iteration counter and config snapshot.
inline void save_checkpoint(const fs::path& path, const TrainConfig& cfg, Model& model, const Adam<float>* opt,
                            std::int64_t iteration) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint '" + path.string() + "'");
    os.write(kCheckpointMagic, 4);
    detail::write_pod<std::uint32_t>(os, kCheckpointFormat);
    detail::write_string(os, to_json(cfg).dump());
    detail::write_pod<std::int64_t>(os, iteration);
    const auto write_vec = [&](const std::string& name, const auto& v) {
      detail::write_string(os, name);
      detail::write_pod<std::uint64_t>(os, v.size());
      os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    const auto params = model.parameters();
    detail::write_pod<std::uint64_t>(os, params.size());
    for (auto* p : params) write_vec(p->name, p->value);
    const auto bufs = model.buffers();
    detail::write_pod<std::uint64_t>(os, bufs.size());
    for (const auto& b : bufs) write_vec(b.name, *b.data);
    if (opt) {
      const auto& moments = opt->moments();
      detail::write_pod<std::int64_t>(os, opt->step_count());
      detail::write_pod<std::uint64_t>(os, moments.size());
      for (std::size_t i = 0; i < moments.size(); ++i) {
        write_vec("m" + std::to_string(i), moments[i].m);
        write_vec("v" + std::to_string(i), moments[i].v);
      }
    } else {
      detail::write_pod<std::int64_t>(os, 0);
      detail::write_pod<std::uint64_t>(os, 0);
    }
    if (!os) throw IoError("failed writing checkpoint '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

struct Checkpoint {
  TrainConfig config;
  Model model;
  std::int64_t iteration = 0;
  std::int64_t optimizer_step = 0;
  std::vector<Adam<float>::Moments> optimizer_moments;
};

inline Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
    throw IoError("'" + path.string() + "' is not a checkpoint");
  }
  const auto format = detail::read_pod<std::uint32_t>(is);
  if (format != kCheckpointFormat) {
    throw IoError("checkpoint '" + path.string() + "' has format " + std::to_string(format) + ", expected " +
                  std::to_string(kCheckpointFormat));
  }
  const nlohmann::json j = nlohmann::json::parse(detail::read_string(is));
  const int version = j.value("config_version", -1);
  if (version != kConfigVersion) {
    throw IoError("checkpoint '" + path.string() + "' was written with config version " + std::to_string(version) +
                  "; this build reads version " + std::to_string(kConfigVersion));
  }
  TrainConfig cfg = config_from_json(j);
  Checkpoint ck{cfg, build_model(cfg), 0, 0, {}};
  ck.iteration = detail::read_pod<std::int64_t>(is);

  const auto read_vec = [&](auto& into, const std::string& expected) {
    const std::string name = detail::read_string(is);
    const auto size = detail::read_pod<std::uint64_t>(is);
    if (!expected.empty() && name != expected) {
      throw IoError("checkpoint entry '" + name + "' found where '" + expected + "' was expected");
    }
    if (size != into.size()) {
      throw IoError("checkpoint entry '" + name + "' has " + std::to_string(size) + " values, model expects " +
                    std::to_string(into.size()));
    }
    is.read(reinterpret_cast<char*>(into.data()), static_cast<std::streamsize>(size * sizeof(float)));
    if (!is) throw IoError("truncated checkpoint '" + path.string() + "'");
  };
  auto params = ck.model.parameters();
  if (detail::read_pod<std::uint64_t>(is) != params.size()) throw IoError("checkpoint parameter count mismatch");
  for (auto* p : params) read_vec(p->value, p->name);
  auto bufs = ck.model.buffers();
  if (detail::read_pod<std::uint64_t>(is) != bufs.size()) throw IoError("checkpoint buffer count mismatch");
  for (auto& b : bufs) read_vec(*b.data, b.name);
  ck.optimizer_step = detail::read_pod<std::int64_t>(is);
  const auto nm = detail::read_pod<std::uint64_t>(is);
  if (nm != 0 && nm != params.size()) throw IoError("checkpoint optimizer state does not match the model");
  for (std::uint64_t i = 0; i < nm; ++i) {
    Adam<float>::Moments mo{std::vector<float>(params[i]->size()), std::vector<float>(params[i]->size())};
    read_vec(mo.m, "m" + std::to_string(i));
    read_vec(mo.v, "v" + std::to_string(i));
    ck.optimizer_moments.push_back(std::move(mo));
  }
  return ck;
}

/// Adam over the encoder+decoder group and, when present, the domain head group.
inline Adam<float> make_optimizer(Model& model, const TrainConfig& cfg) {
  auto shared = model.encoder_parameters();
  const auto dec = model.decoder_parameters();
  shared.insert(shared.end(), dec.begin(), dec.end());
  std::vector<Adam<float>::Group> groups{{"encoder_decoder", shared, cfg.lr_encoder_decoder}};
  if (model.has_domain_head()) groups.push_back({"domain_head", model.domain_parameters(), cfg.lr_domain_head});
  return Adam<float>(std::move(groups));
}

inline TrainState train(const Dataset& source, const Dataset& target, const TrainConfig& cfg,
                        const TrainOptions& opts = {}) {
  cfg.validate();
  if (source.empty()) throw std::invalid_argument("train: source dataset is empty");
  if (!source.all_labeled()) throw std::invalid_argument("train: every source sample needs dot annotations");
  if (cfg.adaptation_enabled && target.empty()) {
    throw std::invalid_argument("train: target dataset is empty but adaptation is enabled");
  }

  auto [train_split, val_split] = split_train_val(source, 1.0 - cfg.val_fraction, cfg.seed);
  const detail::PreparedSet train_set = detail::prepare(train_split, cfg, true);
  const detail::PreparedSet val_set = detail::prepare(val_split, cfg, true);
  detail::PreparedSet target_set;
  if (cfg.adaptation_enabled) target_set = detail::prepare(strip_labels(target), cfg, false);

  TrainState st{build_model(cfg), 0, std::numeric_limits<double>::infinity(), 0, {}, {}};
  Model& model = st.model;
  Adam<float> opt = make_optimizer(model, cfg);

  const int spb = cfg.source_per_batch;
  const int tpb = cfg.adaptation_enabled ? cfg.batch_size - spb : 0;
  const std::size_t n_src = train_split.size();
  const std::size_t n_tgt = cfg.adaptation_enabled ? target.size() : 0;
  const std::int64_t iters_per_epoch = static_cast<std::int64_t>((n_src + spb - 1) / spb);
  const LambdaSchedule schedule{cfg.gamma, iters_per_epoch * cfg.epochs};

  std::mt19937_64 src_rng(cfg.seed * 0x9E3779B97F4A7C15ull + 1);
  std::mt19937_64 tgt_rng(cfg.seed * 0x9E3779B97F4A7C15ull + 2);
  std::vector<std::size_t> tgt_order(n_tgt);
  std::iota(tgt_order.begin(), tgt_order.end(), std::size_t{0});
  std::size_t tgt_cursor = n_tgt;  // forces a shuffle on first use

  const int s = cfg.image_size;
  Tensor<float> batch(spb + tpb, Image::kChannels, s, s);
  Tensor<float> batch_targets(spb, 1, s, s);
  std::vector<DomainTag> tags(spb + tpb, DomainTag::kTarget);
  std::fill(tags.begin(), tags.begin() + spb, DomainTag::kSource);

  const fs::path ckpt_dir = opts.run_dir ? *opts.run_dir / "checkpoints" : fs::path();
  std::ofstream history_file;
  if (opts.run_dir) {
    fs::create_directories(ckpt_dir);
    std::ofstream(*opts.run_dir / "config.json") << to_json(cfg).dump(2) << '\n';
    history_file.open(*opts.run_dir / "history.jsonl");
    if (!history_file) throw IoError("cannot write history in '" + opts.run_dir->string() + "'");
  }

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> src_order(n_src);
    std::iota(src_order.begin(), src_order.end(), std::size_t{0});
    detail::shuffle_indices(src_order, src_rng);

    double sum_density = 0.0, sum_domain = 0.0, sum_lambda = 0.0;
    for (std::int64_t it = 0; it < iters_per_epoch; ++it) {
      BatchInfo info;
      info.iteration = st.iteration;
      for (int j = 0; j < spb; ++j) {
        // The last batch of an epoch wraps around to stay full.
        const std::size_t idx = src_order[(static_cast<std::size_t>(it) * spb + j) % n_src];
        detail::copy_sample(train_set.images, idx, batch, j);
        detail::copy_sample(train_set.targets, idx, batch_targets, j);
        info.source_indices.push_back(idx);
      }
      for (int j = 0; j < tpb; ++j) {
        if (tgt_cursor == n_tgt) {
          detail::shuffle_indices(tgt_order, tgt_rng);
          tgt_cursor = 0;
        }
        const std::size_t idx = tgt_order[tgt_cursor++];
        detail::copy_sample(target_set.images, idx, batch, spb + j);
        info.target_indices.push_back(idx);
      }
      info.source_count = spb;
      info.target_count = tpb;

      const double lambda = cfg.adaptation_enabled ? lambda_at(schedule, st.iteration) : 0.0;
      info.lambda = lambda;
      st.lambda_trace.push_back(lambda);
      if (opts.on_batch) opts.on_batch(info);

      if (cfg.adaptation_enabled) model.set_grl_lambda(lambda);
      // Source and target images run as two passes so that every
      // normalization layer sees single-domain batch statistics. Gradients of
      // both passes accumulate before a single optimizer step, and the domain
      // term is the mean over the whole batch.
      opt.zero_grad();
      const double n_batch = static_cast<double>(spb + tpb);
      auto out = model.forward(batch.slice(0, spb), Mode::kTrain, cfg.adaptation_enabled);
      Tensor<float> d_density(out.density.shape());
      const double dl = density_loss<float>(out.density.values(), batch_targets.values(), d_density.values());
      double ml = 0.0;
      std::vector<float> d_domain;
      if (cfg.adaptation_enabled) {
        d_domain.resize(spb);
        ml += domain_loss<float>(out.domain, std::span(tags).first(spb), d_domain) * spb / n_batch;
        for (float& g : d_domain) g *= static_cast<float>(spb / n_batch);
      }
      model.backward(&d_density, d_domain);
      if (cfg.adaptation_enabled) {
        auto out_t = model.forward(batch.slice(spb, spb + tpb), Mode::kTrain, true, 0);
        d_domain.assign(tpb, 0.0f);
        ml += domain_loss<float>(out_t.domain, std::span(tags).subspan(spb), d_domain) * tpb / n_batch;
        for (float& g : d_domain) g *= static_cast<float>(tpb / n_batch);
        model.backward(nullptr, d_domain);
      }
      const LossBreakdown loss = total_loss(dl, ml);
      opt.step();
      ++st.iteration;
      sum_density += loss.density_loss;
      sum_domain += loss.domain_loss;
      sum_lambda += lambda;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.density_loss = sum_density / static_cast<double>(iters_per_epoch);
    rec.domain_loss = sum_domain / static_cast<double>(iters_per_epoch);
    rec.total = rec.density_loss + rec.domain_loss;
    rec.mean_lambda = sum_lambda / static_cast<double>(iters_per_epoch);
    rec.val_loss = val_split.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : detail::evaluate_density_loss(model, val_set, cfg.batch_size);
    st.history.push_back(rec);

    const bool improved = std::isnan(rec.val_loss) || rec.val_loss < st.best_val_loss;
    if (improved) {
      st.best_val_loss = std::isnan(rec.val_loss) ? st.best_val_loss : rec.val_loss;
      st.best_epoch = epoch;
    }
    if (opts.run_dir) {
      history_file << to_json(rec).dump() << '\n' << std::flush;
      save_checkpoint(ckpt_dir / ("epoch_" + std::to_string(epoch)), cfg, model, &opt, st.iteration);
      if (improved) save_checkpoint(ckpt_dir / "best", cfg, model, &opt, st.iteration);
      if (cfg.keep_last_checkpoints > 0 && epoch > cfg.keep_last_checkpoints) {
        fs::remove(ckpt_dir / ("epoch_" + std::to_string(epoch - cfg.keep_last_checkpoints)));
      }
    }
    if (opts.on_epoch) opts.on_epoch(rec);
  }
  return st;
}

struct Prediction {
  DensityMap density;
  double count = 0.0;
};

struct PredictOptions {
  /// Resize each image to the model's training resolution first. When false
  /// the image is processed at its native size (any multiple of 2^depth).
  bool resize_to_model = true;
};

/// Evaluation-mode density maps and raw-sum counts, one image at a time.
inline std::vector<Prediction> predict(Model& model, std::span<const Image> images, PredictOptions opts = {}) {
  std::vector<Prediction> out;
  out.reserve(images.size());
  const int s = model.config().image_size;
  for (const Image& img : images) {
    const Image in = opts.resize_to_model ? resize_bilinear(img, s, s) : img;
    const Tensor<float> y = model.forward_density(to_tensor<float>(std::span<const Image>(&in, 1)), Mode::kEval);
    Prediction p{DensityMap(y.h(), y.w()), 0.0};
    auto v = p.density.values();
    std::transform(y.values().begin(), y.values().end(), v.begin(), [](float f) { return static_cast<double>(f); });
    p.count = count_from_density(p.density);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<Prediction> predict(Model& model, const Dataset& d, PredictOptions opts = {}) {
  std::vector<Image> imgs;
  imgs.reserve(d.size());
  for (const Sample& s : d.samples) imgs.push_back(s.image);
  return predict(model, std::span<const Image>(imgs), opts);
}

}  // namespace dacount
