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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "dacount/datasets.hpp"
#include "dacount/density.hpp"
#include "dacount/metrics.hpp"
#include "dacount/trainer.hpp"
#include "oracles.hpp"

namespace dacount {
namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------- synthetic experiment

// Scaled-down setting for the synthetic adaptation experiment.
TrainConfig experiment_config(std::uint64_t seed, bool adapt) {
  TrainConfig c;
  c.image_size = 64;
  c.depth = 2;
  c.base_width = 8;
  c.domain_width = 32;
  c.sigma = 2.0;
  c.epochs = 25;
  c.seed = seed;
  c.adaptation_enabled = adapt;
  return c;
}

SyntheticBenchmark experiment_bench(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.shift_strength = 0.7;
  spec.source_count = 200;
  spec.target_count = 200;
  spec.target_test_count = 50;
  spec.min_count = 3;
  spec.max_count = 12;
  return generate_synthetic(spec, seed);
}

MetricReport score(Model& m, const Dataset& d) {
  std::vector<double> p;
  std::vector<std::int64_t> t;
  const auto preds = predict(m, d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    p.push_back(preds[i].count);
    t.push_back(static_cast<std::int64_t>(d.samples[i].dots->count()));
  }
  return compute_metrics(p, t);
}

struct SeedRun {
  std::uint64_t seed = 0;
  SyntheticBenchmark bench;
  MetricReport baseline, adapted;
  std::optional<Model> adapted_model;
};

// Shared by the experiment, composite and checkpoint criteria.
std::vector<SeedRun>& experiment() {
  static std::vector<SeedRun> runs = [] {
    std::vector<SeedRun> out;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SeedRun r;
      r.seed = seed;
      r.bench = experiment_bench(seed);
      TrainState base = train(r.bench.source, r.bench.target, experiment_config(seed, false));
      r.baseline = score(base.model, r.bench.target_test);
      TrainState adapted = train(r.bench.source, r.bench.target, experiment_config(seed, true));
      r.adapted = score(adapted.model, r.bench.target_test);
      r.adapted_model.emplace(std::move(adapted.model));
      std::cerr << "  seed " << seed << ": baseline MAE " << r.baseline.mae << " R2 " << r.baseline.r2
                << " | adapted MAE " << r.adapted.mae << " R2 " << r.adapted.r2 << '\n';
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

// ---------------------------------------------------------------- criteria

Verdict grl_correctness() {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst_fd = 0, worst_neg = 0, worst_zero = 0;
  std::size_t params = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const oracle::GrlReport r = oracle::grl_gradient_check(seed);
    params = r.parameters;
    worst_fd = std::max({worst_fd, r.identity_vs_fd, r.reversed_vs_neg_fd});
    worst_neg = std::max(worst_neg, r.reversed_vs_neg_identity);
    worst_zero = std::max(worst_zero, r.lambda_zero_max);
    ok = ok && r.parameters <= 2000 && r.identity_vs_fd <= 1e-5 && r.reversed_vs_neg_fd <= 1e-5 &&
         r.reversed_vs_neg_identity <= 1e-12 && r.lambda_zero_max == 0.0 && r.head_mismatch == 0.0;
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 30.0;
  return {ok, "params=" + std::to_string(params) + " max_rel_fd_err=" + fmt(worst_fd) +
                  " rel|g_rev+g_id|=" + fmt(worst_neg) + " max|g(lambda=0)|=" + fmt(worst_zero) +
                  " time=" + fmt(elapsed, 3) + "s"};
}

Verdict grl_forward_identity() {
  CountingModel<float> m(oracle::toy_config(21));
  ModelConfig no_head_cfg = oracle::toy_config(21);
  no_head_cfg.domain_head = false;
  CountingModel<float> no_head(no_head_cfg);
  std::mt19937_64 rng(21);
  int identical = 0, density_identical = 0;
  for (int i = 0; i < 100; ++i) {
    m.set_grl_lambda(std::uniform_real_distribution<double>(0, 1)(rng));
    const auto x = testing::random_tensor<float>(2, 3, 8, 8, rng, 0, 1);
    const auto with = m.forward_domain(x, Mode::kEval);
    const auto without = m.domain_from_features(m.bottleneck_features(x, Mode::kEval), Mode::kEval, false);
    if (with == without) ++identical;
    const auto a = m.forward_density(x, Mode::kEval), b = no_head.forward_density(x, Mode::kEval);
    if (std::ranges::equal(a.values(), b.values())) {
      ++density_identical;
    }
  }
  return {identical == 100 && density_identical == 100,
          std::to_string(identical) + "/100 domain outputs and " + std::to_string(density_identical) +
              "/100 density outputs bit-identical"};
}

Verdict mass_conservation() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> count(1, 50);
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const double sigma = t % 2 == 0 ? 1.0 : 3.0;
    const int k = count(rng);
    const DotAnnotationSet dots = testing::random_dots(k, 256, 256, 4 * sigma, rng);
    const double err = std::abs(count_from_density(render_density(dots, 256, 256, sigma)) - k);
    worst = std::max(worst, err / (0.01 * k + 1e-3));
    if (err <= 0.01 * k + 1e-3) ++ok;
  }
  return {ok == 200, std::to_string(ok) + "/200 within tolerance, worst error/tolerance=" + fmt(worst)};
}

Verdict loss_formulas() {
  bool ok = true;
  std::vector<std::string> bad;
  const auto check = [&](const std::string& name, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) {
      ok = false;
      bad.push_back(name + "=" + fmt(got, 10));
    }
  };
  const std::vector<double> t(64, 0.3), p1(64, 0.4), p2(64, 0.5);
  check("exact", density_loss<double>(t, t), std::log(1e-12), 1e-6);
  check("err0.1", density_loss<double>(p1, t), std::log(1e-12 + 0.01), 1e-6);
  check("double_err", density_loss<double>(p2, t) - density_loss<double>(p1, t), std::log(4.0), 1e-6);
  const std::vector<DomainTag> st{DomainTag::kSource, DomainTag::kTarget};
  check("bce_perfect", domain_loss<double>(std::vector<double>{1.0, 0.0}, st), -std::log(1.0 - 1e-7), 1e-6);
  check("bce_half", domain_loss<double>(std::vector<double>{0.5, 0.5}, st), std::log(2.0), 1e-6);
  check("bce_0.9", domain_loss<double>(std::vector<double>{0.9}, std::vector<DomainTag>{DomainTag::kSource}),
        -std::log(0.9), 1e-6);

  // Analytic gradients against central differences.
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(16), q(16), g(16), gd(16);
    std::vector<DomainTag> tags(16);
    for (int i = 0; i < 16; ++i) {
      p[i] = u(rng);
      q[i] = u(rng);
      tags[i] = i % 3 == 0 ? DomainTag::kSource : DomainTag::kTarget;
    }
    density_loss<double>(p, q, g);
    domain_loss<double>(p, tags, gd);
    for (int i = 0; i < 16; ++i) {
      const double h = 1e-6, keep = p[i];
      p[i] = keep + h;
      const double dp = density_loss<double>(p, q), mp = domain_loss<double>(p, tags);
      p[i] = keep - h;
      const double dm = density_loss<double>(p, q), mm = domain_loss<double>(p, tags);
      p[i] = keep;
      const double fd_d = (dp - dm) / (2 * h), fd_m = (mp - mm) / (2 * h);
      worst = std::max(worst, std::abs(g[i] - fd_d) / std::max(std::abs(fd_d), 1e-12));
      worst = std::max(worst, std::abs(gd[i] - fd_m) / std::max(std::abs(fd_m), 1e-12));
    }
  }
  if (worst > 1e-4) ok = false;

  std::uniform_real_distribution<double> v(-30, 5);
  int additive = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = v(rng), b = v(rng);
    const auto r = total_loss(a, b);
    if (r.total == a + b && r.density_loss == a && r.domain_loss == b) ++additive;
  }
  if (additive != 1000) ok = false;
  std::string detail = "max_rel_grad_err=" + fmt(worst) + " additive=" + std::to_string(additive) + "/1000";
  for (const auto& b : bad) detail += " bad:" + b;
  return {ok, detail};
}

Verdict lambda_schedule() {
  const std::int64_t total = 100000;
  const LambdaSchedule s{10.0, total};
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::int64_t> it(0, total);
  std::vector<std::int64_t> samples(1000);
  for (auto& x : samples) x = it(rng);
  std::sort(samples.begin(), samples.end());
  bool monotone = true;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (lambda_at(s, samples[i]) < lambda_at(s, samples[i - 1])) monotone = false;
  }
  const double first = lambda_at(s, 0), last = lambda_at(s, total);
  const bool ok = first == 0.0 && monotone && last >= 0.9999 && last < 1.0 &&
                  std::abs(last - (2.0 / (1.0 + std::exp(-10.0)) - 1.0)) <= 1e-15;
  return {ok, "lambda(0)=" + fmt(first) + " monotone=" + (monotone ? "yes" : "no") + " lambda(total)=" + fmt(last, 10)};
}

Verdict shape_contract() {
  CountingModel<float> m{ModelConfig{}};
  std::mt19937_64 rng(61);
  const auto x = testing::random_tensor<float>(8, 3, 256, 256, rng, 0, 1);
  const auto out = m.forward(x, Mode::kEval, true);
  bool ok = out.density.shape() == Shape{8, 1, 256, 256} && out.domain.size() == 8;
  for (float p : out.domain) ok = ok && p > 0.0f && p < 1.0f;
  bool rejected = false;
  try {
    m.forward_density(Tensor<float>(1, 3, 100, 100), Mode::kEval);
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  return {ok && rejected, "params=" + std::to_string(m.parameter_count()) +
                              " density=8x1x256x256 domain_probs=" + std::to_string(out.domain.size()) +
                              " 100x100_rejected=" + (rejected ? "yes" : "no")};
}

Verdict metric_oracle() {
  using Counts = std::vector<std::int64_t>;
  const auto r = compute_metrics(std::vector<double>{6.2, 7.0}, Counts{5, 7});
  const auto c = compute_metrics(std::vector<double>{4, 4, 4}, Counts{3, 4, 5});
  // Decimal inputs are exact only up to one rounding of 6.2.
  const bool hand = std::abs(r.mae - 0.6) <= 1e-15 && std::abs(r.rmse - std::sqrt(0.72)) <= 1e-15 &&
                    std::abs(r.rmse - 0.8485) < 1e-4 && r.dic == 0.5 && r.abs_dic == 0.5 &&
                    r.agreement_pct == 50.0 && r.mse == 0.5 && c.r2 == 0.0;
  std::mt19937_64 rng(71);
  std::normal_distribution<double> noise(0, 3);
  std::uniform_int_distribution<int> count(0, 40);
  int holds = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + t % 40;
    std::vector<double> p(n);
    Counts y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = count(rng);
      p[i] = y[i] + noise(rng);
    }
    const auto m = compute_metrics(p, y);
    if (m.mae <= m.rmse * (1 + 1e-12)) ++holds;
  }
  return {hand && holds == 1000, std::string("hand_examples=") + (hand ? "match" : "MISMATCH") +
                                     " mae<=rmse=" + std::to_string(holds) + "/1000"};
}

Verdict adaptation_experiment() {
  const auto t0 = Clock::now();
  std::vector<double> base_mae, adapt_mae, base_r2, adapt_r2;
  for (const SeedRun& r : experiment()) {
    base_mae.push_back(r.baseline.mae);
    adapt_mae.push_back(r.adapted.mae);
    base_r2.push_back(r.baseline.r2);
    adapt_r2.push_back(r.adapted.r2);
  }
  const double bm = median3(base_mae), am = median3(adapt_mae);
  const double br = median3(base_r2), ar = median3(adapt_r2);
  const bool ok = am <= 0.8 * bm && ar > br;
  return {ok, "median target MAE baseline=" + fmt(bm, 4) + " adapted=" + fmt(am, 4) + " (reduction " +
                  fmt(100.0 * (1.0 - am / bm), 3) + "%), median R2 baseline=" + fmt(br, 4) +
                  " adapted=" + fmt(ar, 4) + " time=" + fmt(seconds_since(t0), 4) + "s"};
}

Verdict ablation_parity() {
  const SyntheticBenchmark b = experiment_bench(1);
  TrainConfig c = experiment_config(1, false);
  c.epochs = 3;
  const TrainState with = train(b.source, b.target, c);
  const TrainState without = train(b.source, Dataset{}, c);
  bool same = with.history.size() == without.history.size();
  for (std::size_t i = 0; same && i < with.history.size(); ++i) {
    const auto& x = with.history[i];
    const auto& y = without.history[i];
    same = x.density_loss == y.density_loss && x.domain_loss == y.domain_loss && x.val_loss == y.val_loss &&
           x.total == y.total && x.mean_lambda == y.mean_lambda;
  }
  return {same, std::to_string(with.history.size()) + " epochs, history " + (same ? "bit-identical" : "DIFFERS")};
}

Verdict composite_additivity() {
  SeedRun& run = experiment().front();
  const Dataset& test = run.bench.target_test;
  const auto plan = plan_composites(test.size(), 4, 100, 81);
  const Dataset comps = make_composites(test, 2, 2, 100, 81);
  int exact = 0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    std::size_t sum = 0;
    for (std::size_t i : plan[k]) sum += test.samples[i].dots->count();
    if (comps.samples[k].dots->count() == sum) ++exact;
  }

  Model& m = *run.adapted_model;
  const auto single = predict(m, test);
  PredictOptions native;
  native.resize_to_model = false;
  const auto composite = predict(m, comps, native);
  std::vector<double> summed, whole;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    double s = 0.0;
    for (std::size_t i : plan[k]) s += single[i].count;
    summed.push_back(s);
    whole.push_back(composite[k].count);
  }
  const double r = pearson(whole, summed);
  return {exact == 100 && r > 0.5,
          std::to_string(exact) + "/100 composite counts exact, pearson(composite, summed)=" + fmt(r, 4)};
}

Verdict checkpoint_round_trip() {
  SeedRun& run = experiment().front();
  const fs::path dir = fs::temp_directory_path() / ("dacount_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const fs::path path = dir / "model.ckpt";
  const TrainConfig cfg = experiment_config(run.seed, true);
  save_checkpoint(path, cfg, *run.adapted_model, nullptr, 0);
  Checkpoint ck = load_checkpoint(path);
  fs::remove_all(dir);

  const Dataset probe{"probe", std::vector<Sample>(run.bench.target_test.samples.begin(),
                                                   run.bench.target_test.samples.begin() + 8)};
  const auto a = predict(*run.adapted_model, probe);
  const auto b = predict(ck.model, probe);
  int identical = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].count == b[i].count && a[i].density.values().size() == b[i].density.values().size() &&
        std::equal(a[i].density.values().begin(), a[i].density.values().end(), b[i].density.values().begin())) {
      ++identical;
    }
  }
  return {identical == 8, std::to_string(identical) + "/8 probe predictions bit-identical"};
}

}  // namespace
}  // namespace dacount

int main() {
  using namespace dacount;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"GRL correctness", grl_correctness},
      {"GRL forward identity", grl_forward_identity},
      {"density mass conservation", mass_conservation},
      {"loss formulas", loss_formulas},
      {"lambda schedule", lambda_schedule},
      {"shape contract", shape_contract},
      {"metric oracle", metric_oracle},
      {"synthetic adaptation experiment", adaptation_experiment},
      {"ablation parity", ablation_parity},
      {"composite additivity", composite_additivity},
      {"checkpoint round-trip", checkpoint_round_trip},
  };
  int failed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << index << "] " << name << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
