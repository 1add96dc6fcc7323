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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "dacount/datasets.hpp"
#include "dacount/density.hpp"
#include "test_util.hpp"

namespace dacount {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string("'") + DACOUNT_CLI_PATH + "' " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  Result r;
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t line_count(const fs::path& p) {
  std::ifstream is(p);
  std::size_t n = 0;
  for (std::string l; std::getline(is, l);) ++n;
  return n;
}

// One small benchmark shared by every test in this file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    const Result r = run("synth --out " + q(data()) +
                         " --image-size 16 --min 1 --max 4 --blob-radius 1.5 --source-count 20 --target-count 8"
                         " --test-count 6 --seed 3");
    ASSERT_EQ(r.code, 0) << r.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path root() { return dir_->path(); }
  static fs::path data() { return root() / "bench"; }
  static std::string tiny_train_flags() {
    return " --image-size 16 --depth 1 --base-width 4 --domain-width 4 --batch-size 4 --source-per-batch 2"
           " --epochs 2 --seed 1";
  }

  static testing::TempDir* dir_;
};

testing::TempDir* CliTest::dir_ = nullptr;

TEST_F(CliTest, SynthWritesThreeDatasets) {
  for (const char* part : {"source", "target", "target_test"}) {
    EXPECT_TRUE(fs::exists(data() / part / "manifest.tsv")) << part;
  }
  EXPECT_EQ(line_count(data() / "source" / "manifest.tsv"), 21u);
  EXPECT_FALSE(fs::exists(data() / "target" / "annotations.csv"));
  EXPECT_TRUE(fs::exists(data() / "target_test" / "annotations.csv"));
  EXPECT_EQ(run("synth --out " + q(data())).code, 1);  // refuses to overwrite
}

TEST_F(CliTest, RenderDensityConservesCount) {
  const fs::path ann = root() / "dots.csv";
  std::ofstream(ann) << "image_id,x,y\nimg,20,20\nimg,30,40\nimg,50,50\nimg,45.5,12.25\nimg,60,33\n";
  const fs::path out = root() / "render";
  const Result r = run("render-density --annotations " + q(ann) + " --height 80 --width 80 --sigma 3 --out " + q(out));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("img dots=5"), std::string::npos);
  const DensityMap m = load_density_map((out / "img.dmap").string());
  EXPECT_NEAR(count_from_density(m), 5.0, 0.05);
  EXPECT_TRUE(fs::exists(out / "img.png"));
  EXPECT_TRUE(fs::exists(out / "counts.csv"));
}

TEST_F(CliTest, CompositeAndPatches) {
  const fs::path comp = root() / "comp";
  ASSERT_EQ(run("composite --data " + q(data() / "source") + " --count 10 --seed 2 --out " + q(comp)).code, 0);
  const Dataset c = load_dataset_dir(comp, DomainTag::kSource);
  ASSERT_EQ(c.size(), 10u);
  EXPECT_EQ(c.samples[0].image.height(), 32);

  const fs::path patches = root() / "patches";
  ASSERT_EQ(run("patches --data " + q(data() / "source") + " --patch 8 --count 12 --seed 2 --out " + q(patches)).code,
            0);
  const Dataset p = load_dataset_dir(patches, DomainTag::kSource);
  ASSERT_EQ(p.size(), 12u);
  EXPECT_EQ(p.samples[0].image.width(), 8);
  EXPECT_EQ(run("patches --data " + q(data() / "source") + " --domain elsewhere --out " + q(root() / "p2")).code, 1);
}

TEST_F(CliTest, TrainEvalPredict) {
  const fs::path run_dir = root() / "run";
  Result r = run("train --source " + q(data() / "source") + " --target " + q(data() / "target") + " --run-dir " +
                 q(run_dir) + tiny_train_flags());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(line_count(run_dir / "history.jsonl"), 2u);
  EXPECT_TRUE(fs::exists(run_dir / "checkpoints" / "best"));

  // An existing run directory is not overwritten silently.
  r = run("train --source " + q(data() / "source") + " --target " + q(data() / "target") + " --run-dir " +
          q(run_dir) + tiny_train_flags());
  EXPECT_EQ(r.code, 1);

  const fs::path ledger = root() / "ledger.tsv";
  r = run("eval --data " + q(data() / "target_test") + " --checkpoint " + q(run_dir / "checkpoints" / "best") +
          " --ledger " + q(ledger) + " --label adapted");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("n=6"), std::string::npos);
  EXPECT_NE(r.out.find("mae="), std::string::npos);
  EXPECT_EQ(line_count(ledger), 2u);

  const fs::path out = root() / "pred";
  r = run("predict --checkpoint " + q(run_dir / "checkpoints" / "best") + " --data " + q(data() / "target_test") +
          " --out " + q(out));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(line_count(out / "counts.csv"), 7u);
  const Dataset test = load_dataset_dir(data() / "target_test", DomainTag::kTarget);
  const std::string first = test.samples[0].image.id();
  EXPECT_TRUE(fs::exists(out / (first + ".png")));
  EXPECT_EQ(load_density_map((out / (first + ".dmap")).string()).height(), 16);

  // Checkpoint trained at 16 px against 32 px composites.
  const fs::path comp = root() / "comp_eval";
  ASSERT_EQ(run("composite --data " + q(data() / "target_test") + " --count 3 --out " + q(comp)).code, 0);
  EXPECT_EQ(run("eval --data " + q(comp) + " --checkpoint " + q(run_dir / "checkpoints" / "best") + " --ledger " +
                q(ledger))
                .code,
            1);
  EXPECT_EQ(run("eval --data " + q(comp) + " --checkpoint " + q(run_dir / "checkpoints" / "best") + " --resize" +
                " --ledger " + q(ledger))
                .code,
            0);
}

TEST_F(CliTest, BaselineTrainingNeedsNoTarget) {
  const fs::path run_dir = root() / "baseline";
  const Result r =
      run("train --no-adapt --source " + q(data() / "source") + " --run-dir " + q(run_dir) + tiny_train_flags());
  ASSERT_EQ(r.code, 0);
  std::ifstream cf(run_dir / "config.json");
  EXPECT_FALSE(nlohmann::json::parse(cf).at("adaptation_enabled").get<bool>());
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("train --source " + q(data() / "source") + " --run-dir " + q(root() / "x") + tiny_train_flags()).code,
            1);
  const fs::path cfg = root() / "bad.json";
  std::ofstream(cfg) << R"({"learning_rate": 0.1})";
  EXPECT_EQ(run("train --no-adapt --source " + q(data() / "source") + " --config " + q(cfg) + " --run-dir " +
                q(root() / "y"))
                .code,
            1);
  EXPECT_EQ(run("train --no-adapt --source " + q(data() / "source") + " --source-per-batch 0 --run-dir " +
                q(root() / "z"))
                .code,
            1);
  EXPECT_EQ(run("eval --data " + q(data() / "target") + " --predictions " + q(cfg)).code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, EvalOfPerfectPredictions) {
  const Dataset test = load_dataset_dir(data() / "target_test", DomainTag::kTarget);
  const fs::path csv = root() / "perfect.csv";
  {
    std::ofstream os(csv);
    os << "image_id,count\n";
    for (const Sample& s : test.samples) os << s.image.id() << ',' << s.dots->count() << '\n';
  }
  const Result r = run("eval --data " + q(data() / "target_test") + " --predictions " + q(csv) + " --ledger " +
                       q(root() / "perfect.tsv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("agreement_pct=100"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mae=0"), std::string::npos) << r.out;
}

}  // namespace
}  // namespace dacount
