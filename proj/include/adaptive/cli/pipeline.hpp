#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adaptive/behavior/behavior.hpp"
#include "adaptive/bench/suite.hpp"
#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/planner/planner.hpp"
#include "adaptive/scenario/generator.hpp"

namespace adaptive::cli {

struct GenerateSettings {
  std::vector<std::string> archetypes{"PIT", "BOS", "SIN", "LAS"};
  int count = 50;  // logs per archetype
  std::uint64_t seed = 0;
  scenario::GeneratorConfig generator;  // city_tag is set per archetype
};

struct PipelineConfig {
  std::filesystem::path corpus_dir = "corpus";
  std::filesystem::path model_dir = "models";
  std::filesystem::path report_dir = "report";
  std::filesystem::path plot_dir = "report/plots";
  std::filesystem::path planner_config;  // empty: built-in planner defaults
  std::filesystem::path plot_script;     // empty: no rendering
  GenerateSettings generate;
  calibrate::ParameterGrid grid;
  int k = 16;
  std::uint64_t seed = 1;  // clustering, training and the experiment suite
  behavior::TrainOptions train;
  bench::ExperimentPlan experiment;
  int jobs = 0;

  planner::PlannerConfig planner() const;
};

// Relative data directories resolve against `base`; the planner config and
// plot script resolve against the config file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::filesystem::path& base);
PipelineConfig default_pipeline_config(const std::filesystem::path& base);

struct ManifestEntry {
  std::string file;
  std::string scenario_id;
  std::string city_tag;
  std::uint64_t seed = 0;
  std::string lane_template;
  scenario::BehaviorParams truth;
  int attempts = 0;
};

struct Corpus {
  std::vector<scenario::DrivingLog> logs;
  std::vector<scenario::BehaviorParams> truth;
};

// Writes {city}_{seed}.log for every (archetype, seed) plus manifest.jsonl.
// A seed whose placement stays infeasible is replaced by the next seed above
// the requested range, with a warning.
std::vector<ManifestEntry> cmd_generate(const GenerateSettings& settings, const std::filesystem::path& out_dir, int jobs,
                                        std::ostream& log);

Corpus load_corpus(const std::filesystem::path& dir);

std::vector<calibrate::LogFit> cmd_fit(const Corpus& corpus, const PipelineConfig& config);
calibrate::ClusterModel cmd_cluster(const std::vector<calibrate::LogFit>& fits, const PipelineConfig& config);
void cmd_train(const Corpus& corpus, const std::vector<calibrate::LogFit>& fits, const calibrate::ClusterModel& clusters,
               const PipelineConfig& config);
bench::BenchmarkReport cmd_bench(const Corpus& corpus, const std::vector<calibrate::LogFit>& fits,
                                 const calibrate::ClusterModel& clusters, const PipelineConfig& config);
void cmd_plot(const bench::PlotData& plots, const PipelineConfig& config, std::ostream& log);

// Runs fit, cluster, train, bench and plot in order. Each stage writes into
// a ".partial" path that is renamed once the stage succeeds.
void run_pipeline(const PipelineConfig& config, std::ostream& log);

// Wraps a stage failure with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

// 1 for user errors (usage, parse, I/O), 2 for everything else.
int exit_code_for(const std::exception& e);

}  // namespace adaptive::cli
