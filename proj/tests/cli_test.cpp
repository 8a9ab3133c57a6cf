#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "adaptive/cli/pipeline.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/scenario/log_io.hpp"

namespace adaptive::cli {
namespace {

namespace fs = std::filesystem;

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("cli_test_" + std::to_string(::getpid()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // Small but complete configuration: 2 archetypes, coarse grid, short horizons.
  PipelineConfig tiny(const fs::path& base) const {
    PipelineConfig c = default_pipeline_config(base);
    c.generate.archetypes = {"BOS", "PIT"};
    c.generate.count = 3;
    c.grid.min_gap = {1.0, 2.0};
    c.grid.headway_time = {0.5, 1.5};
    c.grid.max_acceleration = {1.0, 2.0};
    c.grid.max_deceleration = {2.0, 3.5};
    c.k = 2;
    c.train.epochs = 3;
    c.train.learning_rate = 1e-3;
    c.experiment.variants = {bench::Variant::kConstantVelocity, bench::Variant::kAdaptiveLog,
                             bench::Variant::kAdaptiveLogHeldOut};
    c.experiment.folds = 2;
    c.experiment.grid = c.grid;
    c.experiment.train = c.train;
    c.jobs = 2;
    return c;
  }

  static std::map<std::string, std::string> tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = scenario::read_text_file(e.path());
    }
    return out;
  }

  fs::path root_;
};

TEST_F(Workspace, GenerateZeroCountGivesEmptyManifest) {
  auto c = tiny(root_);
  c.generate.count = 0;
  std::ostringstream log;
  EXPECT_TRUE(cmd_generate(c.generate, c.corpus_dir, 1, log).empty());
  EXPECT_EQ(scenario::read_text_file(c.corpus_dir / "manifest.jsonl"), "");
  EXPECT_TRUE(load_corpus(c.corpus_dir).logs.empty());
}

TEST_F(Workspace, GenerateWritesOneLogPerSeedAndIsRepeatable) {
  const auto c = tiny(root_);
  std::ostringstream log;
  const auto entries = cmd_generate(c.generate, c.corpus_dir, 2, log);
  ASSERT_EQ(entries.size(), 6u);
  EXPECT_EQ(entries[0].scenario_id, "BOS_0");
  EXPECT_EQ(entries[5].scenario_id, "PIT_2");
  for (const auto& e : entries) EXPECT_TRUE(fs::exists(c.corpus_dir / e.file)) << e.file;
  const auto first = tree(c.corpus_dir);
  cmd_generate(c.generate, c.corpus_dir, 1, log);
  EXPECT_EQ(tree(c.corpus_dir), first);
  const auto corpus = load_corpus(c.corpus_dir);
  EXPECT_EQ(corpus.logs.size(), 6u);
  EXPECT_EQ(corpus.truth.size(), 6u);
}

TEST_F(Workspace, MissingCorpusPointsAtGenerate) {
  try {
    load_corpus(root_ / "nowhere");
    FAIL() << "expected an error";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("generate"), std::string::npos) << e.what();
    EXPECT_EQ(exit_code_for(e), 1);
  }
  std::ostringstream log;
  try {
    run_pipeline(tiny(root_), log);
    FAIL() << "expected an error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load");
    EXPECT_EQ(e.exit_code(), 1);
  }
}

TEST_F(Workspace, ConfigPathsResolveAgainstBaseAndConfigDir) {
  fs::create_directories(root_ / "cfg");
  scenario::write_text_file(root_ / "cfg" / "planner.json", "{\"horizon\": 30}");
  scenario::write_text_file(root_ / "cfg" / "p.json",
                            R"({"corpus_dir":"c","planner_config":"planner.json","k":3,"train":{"epochs":2}})");
  const auto c = load_pipeline_config(root_ / "cfg" / "p.json", root_ / "work");
  EXPECT_EQ(c.corpus_dir, root_ / "work" / "c");
  EXPECT_EQ(c.planner_config, root_ / "cfg" / "planner.json");
  EXPECT_EQ(c.planner().horizon, 30u);
  EXPECT_EQ(c.k, 3);
  scenario::write_text_file(root_ / "cfg" / "bad.json", R"({"k":0})");
  EXPECT_THROW(load_pipeline_config(root_ / "cfg" / "bad.json", root_), UsageError);
  scenario::write_text_file(root_ / "cfg" / "broken.json", R"({"k":)");
  EXPECT_THROW(load_pipeline_config(root_ / "cfg" / "broken.json", root_), ParseError);
}

TEST_F(Workspace, PipelineRerunIsByteIdentical) {
  std::ostringstream log;
  std::map<std::string, std::string> outputs[2];
  for (int run = 0; run < 2; ++run) {
    const auto c = tiny(root_ / std::to_string(run));
    cmd_generate(c.generate, c.corpus_dir, c.jobs, log);
    run_pipeline(c, log);
    for (const auto& dir : {c.model_dir, c.report_dir}) {
      for (auto& [name, text] : tree(dir)) {
        if (fs::path(name).filename() == "latency.json") continue;
        outputs[run][fs::relative(dir, c.corpus_dir.parent_path()).string() + "/" + name] = text;
      }
    }
  }
  EXPECT_GE(outputs[0].size(), 10u);
  EXPECT_EQ(outputs[0], outputs[1]);
  for (const auto& name : {"models/fits.jsonl", "models/clusters.json", "models/classifier.json", "report/scores.csv",
                           "report/summary.json", "report/plots/min_gap_summary.csv"}) {
    EXPECT_EQ(outputs[0].count(name), 1u) << name;
  }
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ADAPTIVE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Workspace, CliExitCodes) {
  EXPECT_EQ(run_cli("fit --out " + root_.string()), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("generate --count 1 --archetypes BOS --out " + root_.string()), 0);
  EXPECT_TRUE(fs::exists(root_ / "corpus" / "BOS_0.log"));
  EXPECT_EQ(run_cli("generate --count 1 --archetypes NYC --out " + root_.string()), 1);
}

}  // namespace
}  // namespace adaptive::cli
