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

// Command-line front end: train, eval, predict, render-density, synth,
// patches, composite.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure
// (I/O, divergence).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dacount/datasets.hpp"
#include "dacount/density.hpp"
#include "dacount/image_io.hpp"
#include "dacount/metrics.hpp"
#include "dacount/trainer.hpp"

namespace fs = std::filesystem;
using namespace dacount;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path run_root() {
  const char* env = std::getenv("DACOUNT_RUN_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

// Creates @p dir, refusing to touch a non-empty existing one unless forced.
void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir))) {
    if (!force) throw UsageError("output '" + dir.string() + "' already exists; pass --force to overwrite it");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

// Accepts either a dataset directory (images/ + optional annotations.csv) or
// a flat folder of PNGs with an optional annotations.csv next to them.
Dataset open_dataset(const fs::path& dir, DomainTag domain) {
  if (!fs::is_directory(dir)) throw UsageError("dataset directory '" + dir.string() + "' does not exist");
  if (fs::is_directory(dir / "images")) return load_dataset_dir(dir, domain);
  const fs::path ann = dir / "annotations.csv";
  return load_dataset(dir, fs::exists(ann) ? std::optional<fs::path>(ann) : std::nullopt, domain,
                      dir.filename().string());
}

DomainTag parse_domain(const std::string& s) {
  if (s == "source") return DomainTag::kSource;
  if (s == "target") return DomainTag::kTarget;
  throw UsageError("--domain must be 'source' or 'target', got '" + s + "'");
}

void write_counts(const fs::path& path, const std::vector<std::string>& ids, const std::vector<double>& counts) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "image_id,count,integer_count\n" << std::setprecision(10);
  for (std::size_t i = 0; i < ids.size(); ++i) os << ids[i] << ',' << counts[i] << ',' << round_count(counts[i]) << '\n';
}

void write_density_outputs(const fs::path& dir, const std::string& id, const DensityMap& m) {
  save_density_map((dir / (id + ".dmap")).string(), m);
  double peak = 0.0;
  for (double v : m.values()) peak = std::max(peak, v);
  write_gray_png(dir / (id + ".png"), m.height(), m.width(), m.values(), peak);
}

std::map<std::string, double> read_prediction_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open predictions file '" + path.string() + "'");
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line_no == 1) continue;  // header
    std::stringstream ss(line);
    std::string id, count;
    std::getline(ss, id, ',');
    std::getline(ss, count, ',');
    const auto v = detail::parse_double(detail::trim(count));
    if (!v) throw UsageError(path.string() + ":" + std::to_string(line_no) + ": malformed count '" + count + "'");
    out[detail::trim(id)] = *v;
  }
  return out;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string source, target, config_file, run_dir;
  bool no_adapt = false, force = false;
  std::optional<int> batch_size, image_size, epochs, source_per_batch, depth, base_width, domain_width, domain_stages,
      keep_last;
  std::optional<double> lr_ed, lr_dom, val_fraction, sigma, gamma;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> activation;
  bool renormalize = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "train a counting model (adapted by default, --no-adapt for the baseline)");
  c->add_option("--source", a.source, "labeled source dataset directory")->required();
  c->add_option("--target", a.target, "unlabeled target dataset directory");
  c->add_option("--config", a.config_file, "JSON config; command-line flags take precedence");
  c->add_option("--run-dir", a.run_dir, "run directory (default: $DACOUNT_RUN_ROOT/train_seed<seed>)");
  c->add_flag("--no-adapt", a.no_adapt, "baseline: drop the domain classifier and ignore target data");
  c->add_flag("--force", a.force, "overwrite an existing run directory");
  c->add_option("--batch-size", a.batch_size);
  c->add_option("--image-size", a.image_size);
  c->add_option("--epochs", a.epochs);
  c->add_option("--source-per-batch", a.source_per_batch);
  c->add_option("--depth", a.depth);
  c->add_option("--base-width", a.base_width);
  c->add_option("--domain-width", a.domain_width);
  c->add_option("--domain-stages", a.domain_stages);
  c->add_option("--keep-last-checkpoints", a.keep_last);
  c->add_option("--lr-encoder-decoder", a.lr_ed);
  c->add_option("--lr-domain-head", a.lr_dom);
  c->add_option("--val-fraction", a.val_fraction);
  c->add_option("--sigma", a.sigma);
  c->add_option("--gamma", a.gamma);
  c->add_option("--seed", a.seed);
  c->add_option("--density-activation", a.activation, "sigmoid or linear");
  c->add_flag("--renormalize-border-kernels", a.renormalize);
}

TrainConfig resolve_config(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config_file.empty()) {
    std::ifstream is(a.config_file);
    if (!is) throw UsageError("cannot open config file '" + a.config_file + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config file '" + a.config_file + "' is not valid JSON: " + e.what());
    }
    cfg = merge_config(cfg, j);
  }
  nlohmann::json flags = nlohmann::json::object();
  const auto put = [&](const char* key, const auto& opt) {
    if (opt) flags[key] = *opt;
  };
  put("batch_size", a.batch_size);
  put("image_size", a.image_size);
  put("epochs", a.epochs);
  put("source_per_batch", a.source_per_batch);
  put("depth", a.depth);
  put("base_width", a.base_width);
  put("domain_width", a.domain_width);
  put("domain_stages", a.domain_stages);
  put("keep_last_checkpoints", a.keep_last);
  put("lr_encoder_decoder", a.lr_ed);
  put("lr_domain_head", a.lr_dom);
  put("val_fraction", a.val_fraction);
  put("sigma", a.sigma);
  put("gamma", a.gamma);
  put("seed", a.seed);
  put("density_activation", a.activation);
  if (a.no_adapt) flags["adaptation_enabled"] = false;
  if (a.renormalize) flags["renormalize_border_kernels"] = true;
  cfg = merge_config(cfg, flags);
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const TrainConfig cfg = resolve_config(a);
  if (cfg.adaptation_enabled && a.target.empty()) {
    throw UsageError("--target is required unless --no-adapt is given");
  }
  if (cfg.adaptation_enabled && !fs::is_directory(a.target)) {
    throw UsageError("target dataset directory '" + a.target + "' does not exist");
  }
  const Dataset source = open_dataset(a.source, DomainTag::kSource);
  const Dataset target = cfg.adaptation_enabled ? strip_labels(open_dataset(a.target, DomainTag::kTarget)) : Dataset{};
  const fs::path dir = a.run_dir.empty() ? run_root() / ("train_seed" + std::to_string(cfg.seed)) : fs::path(a.run_dir);
  prepare_output_dir(dir, a.force);

  TrainOptions opts;
  opts.run_dir = dir;
  opts.on_epoch = [&](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << "/" << cfg.epochs << "  density " << r.density_loss << "  domain "
              << r.domain_loss << "  val " << r.val_loss << "  lambda " << r.mean_lambda << '\n';
  };
  std::cerr << (cfg.adaptation_enabled ? "adapted" : "baseline") << " run: " << source.size() << " source, "
            << target.size() << " target images -> " << dir.string() << '\n';
  const TrainState st = train(source, target, cfg, opts);
  std::cout << "run_dir=" << dir.string() << "\nepochs=" << st.history.size() << "\nbest_epoch=" << st.best_epoch
            << "\nbest_val_loss=" << st.best_val_loss << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint, data, predictions, ledger, label;
  bool resize = false;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "score predicted counts against a labeled dataset");
  c->add_option("--data", a.data, "labeled dataset directory")->required();
  auto* ck = c->add_option("--checkpoint", a.checkpoint, "model checkpoint to evaluate");
  auto* pr = c->add_option("--predictions", a.predictions, "CSV of image_id,count to score instead of a model");
  ck->excludes(pr);
  c->add_flag("--resize", a.resize, "resize images whose size differs from the checkpoint's training size");
  c->add_option("--ledger", a.ledger, "ledger file to append to (default: $DACOUNT_RUN_ROOT/eval_ledger.tsv)");
  c->add_option("--label", a.label, "row label in the ledger");
}

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.predictions.empty()) {
    throw UsageError("eval needs exactly one of --checkpoint or --predictions");
  }
  const Dataset data = open_dataset(a.data, DomainTag::kTarget);
  if (data.empty()) throw UsageError("dataset '" + a.data + "' has no images");
  if (!data.all_labeled()) throw UsageError("dataset '" + a.data + "' has no annotations; eval needs labeled data");

  std::vector<double> pred;
  std::vector<std::int64_t> truth;
  for (const Sample& s : data.samples) truth.push_back(static_cast<std::int64_t>(s.dots->count()));
  if (!a.checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(a.checkpoint);
    const int size = ck.config.image_size;
    if (!a.resize) {
      for (const Sample& s : data.samples) {
        if (s.image.height() != size || s.image.width() != size) {
          throw UsageError("image '" + s.image.id() + "' is " + std::to_string(s.image.height()) + "x" +
                           std::to_string(s.image.width()) + " but the checkpoint was trained at " +
                           std::to_string(size) + "x" + std::to_string(size) + "; pass --resize to rescale");
        }
      }
    }
    for (const Prediction& p : predict(ck.model, data)) pred.push_back(p.count);
  } else {
    const auto table = read_prediction_file(a.predictions);
    std::vector<std::string> missing;
    for (const Sample& s : data.samples) {
      const auto it = table.find(s.image.id());
      if (it == table.end()) {
        missing.push_back(s.image.id());
      } else {
        pred.push_back(it->second);
      }
    }
    if (!missing.empty()) {
      std::string list;
      for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
      throw UsageError("predictions file lacks " + std::to_string(missing.size()) + " image(s): " + list);
    }
  }

  const MetricReport r = compute_metrics(pred, truth);
  std::cout << to_key_value(r);
  const fs::path ledger = a.ledger.empty() ? run_root() / "eval_ledger.tsv" : fs::path(a.ledger);
  if (ledger.has_parent_path()) fs::create_directories(ledger.parent_path());
  const std::string label = !a.label.empty() ? a.label : !a.checkpoint.empty() ? a.checkpoint : a.predictions;
  append_to_ledger(ledger, label, r);
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string checkpoint, data, out;
  bool force = false;
};

void add_predict(CLI::App& app, PredictArgs& a) {
  auto* c = app.add_subcommand("predict", "write density maps, previews and a counts table");
  c->add_option("--checkpoint", a.checkpoint)->required();
  c->add_option("--data", a.data, "image directory or dataset directory")->required();
  c->add_option("--out", a.out)->required();
  c->add_flag("--force", a.force);
}

int cmd_predict(const PredictArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = strip_labels(open_dataset(a.data, DomainTag::kTarget));
  prepare_output_dir(a.out, a.force);
  const auto preds = predict(ck.model, data);
  std::vector<std::string> ids;
  std::vector<double> counts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::string& id = data.samples[i].image.id();
    write_density_outputs(a.out, id, preds[i].density);
    ids.push_back(id);
    counts.push_back(preds[i].count);
  }
  write_counts(fs::path(a.out) / "counts.csv", ids, counts);
  std::cout << "wrote " << ids.size() << " predictions to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- render-density

struct RenderArgs {
  std::string annotations, out;
  int height = 0, width = 0;
  double sigma = 1.0;
  bool renormalize = false, force = false;
};

void add_render(CLI::App& app, RenderArgs& a) {
  auto* c = app.add_subcommand("render-density", "render ground-truth density maps from dot annotations");
  c->add_option("--annotations", a.annotations, "annotation CSV (image_id,x,y)")->required();
  c->add_option("--height", a.height)->required()->check(CLI::PositiveNumber);
  c->add_option("--width", a.width)->required()->check(CLI::PositiveNumber);
  c->add_option("--sigma", a.sigma)->check(CLI::PositiveNumber);
  c->add_option("--out", a.out)->required();
  c->add_flag("--renormalize-border-kernels", a.renormalize);
  c->add_flag("--force", a.force);
}

int cmd_render(const RenderArgs& a) {
  const auto table = read_annotations(a.annotations);
  prepare_output_dir(a.out, a.force);
  std::vector<std::string> ids;
  std::vector<double> counts;
  for (const auto& [id, points] : table) {
    const DensityMap m = render_density(DotAnnotationSet{id, points}, a.height, a.width, a.sigma,
                                        RenderOptions{a.renormalize});
    write_density_outputs(a.out, id, m);
    ids.push_back(id);
    counts.push_back(count_from_density(m));
    std::cout << id << " dots=" << points.size() << " sum=" << counts.back() << '\n';
  }
  write_counts(fs::path(a.out) / "counts.csv", ids, counts);
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* c = app.add_subcommand("synth", "generate the synthetic source/target/target_test benchmark");
  c->add_option("--out", a.out)->required();
  c->add_option("--shift", a.spec.shift_strength, "appearance shift strength in [0,1]");
  c->add_option("--image-size", a.spec.image_size);
  c->add_option("--min", a.spec.min_count);
  c->add_option("--max", a.spec.max_count);
  c->add_option("--blob-radius", a.spec.blob_radius);
  c->add_option("--noise", a.spec.noise_level);
  c->add_option("--source-count", a.spec.source_count);
  c->add_option("--target-count", a.spec.target_count);
  c->add_option("--test-count", a.spec.target_test_count);
  c->add_option("--seed", a.seed);
  c->add_flag("--force", a.force);
}

int cmd_synth(const SynthArgs& a) {
  try {
    a.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  prepare_output_dir(a.out, a.force);
  const SyntheticBenchmark b = generate_synthetic(a.spec, a.seed);
  const fs::path out(a.out);
  write_dataset(out / "source", b.source);
  write_dataset(out / "target", b.target);
  write_dataset(out / "target_test", b.target_test);
  std::cout << "source=" << b.source.size() << " target=" << b.target.size()
            << " target_test=" << b.target_test.size() << " -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- patches / composite

struct TransformArgs {
  std::string data, out, domain = "source";
  int patch = 512, count = 1, rows = 2, cols = 2;
  std::uint64_t seed = 0;
  bool force = false;
};

CLI::App* add_transform_common(CLI::App& app, const char* name, const char* help, TransformArgs& a) {
  auto* c = app.add_subcommand(name, help);
  c->add_option("--data", a.data, "dataset directory")->required();
  c->add_option("--domain", a.domain, "source or target");
  c->add_option("--count", a.count)->check(CLI::PositiveNumber);
  c->add_option("--seed", a.seed);
  c->add_option("--out", a.out)->required();
  c->add_flag("--force", a.force);
  return c;
}

int cmd_patches(const TransformArgs& a) {
  const Dataset d = open_dataset(a.data, parse_domain(a.domain));
  prepare_output_dir(a.out, a.force);
  const Dataset p = extract_patches(d, a.patch, a.count, a.seed);
  write_dataset(a.out, p);
  std::cout << "wrote " << p.size() << " patches of " << a.patch << "x" << a.patch << " to " << a.out << '\n';
  return 0;
}

int cmd_composite(const TransformArgs& a) {
  const Dataset d = open_dataset(a.data, parse_domain(a.domain));
  prepare_output_dir(a.out, a.force);
  const Dataset c = make_composites(d, a.rows, a.cols, a.count, a.seed);
  write_dataset(a.out, c);
  std::cout << "wrote " << c.size() << " composites of " << a.rows << "x" << a.cols << " images to " << a.out
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dacount: domain-adversarial density counting"};
  app.require_subcommand(1);
  TrainArgs train_args;
  EvalArgs eval_args;
  PredictArgs predict_args;
  RenderArgs render_args;
  SynthArgs synth_args;
  TransformArgs patch_args, comp_args;
  add_train(app, train_args);
  add_eval(app, eval_args);
  add_predict(app, predict_args);
  add_render(app, render_args);
  add_synth(app, synth_args);
  add_transform_common(app, "patches", "extract random square patches", patch_args)
      ->add_option("--patch", patch_args.patch, "patch side in pixels")
      ->check(CLI::PositiveNumber);
  auto* comp = add_transform_common(app, "composite", "stitch images into grid composites", comp_args);
  comp->add_option("--rows", comp_args.rows)->check(CLI::PositiveNumber);
  comp->add_option("--cols", comp_args.cols)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "train") return cmd_train(train_args);
    if (cmd == "eval") return cmd_eval(eval_args);
    if (cmd == "predict") return cmd_predict(predict_args);
    if (cmd == "render-density") return cmd_render(render_args);
    if (cmd == "synth") return cmd_synth(synth_args);
    if (cmd == "patches") return cmd_patches(patch_args);
    if (cmd == "composite") return cmd_composite(comp_args);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error in '" << e.key() << "': " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
