#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adaptive/behavior/behavior.hpp"
#include "adaptive/bench/closed_loop.hpp"
#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/scenario/generator.hpp"

namespace adaptive::bench {

// Planner variants, differing only in the internal world used for scoring.
enum class Variant {
  kConstantVelocity,  // agents on rails
  kReactiveDefault,   // reactive, DEFAULT parameter row
  kReactiveTruth,     // reactive, the environment's own parameters
  kLogOracle,         // reactive, parameters fitted to this log
  kAdaptiveLog,       // reactive, classifier over behaviour clusters
  kAdaptiveCity,      // reactive, classifier over city tags
  kCityOracle,        // reactive, parameters fitted to the true city
  kAdaptiveLogHeldOut,  // kAdaptiveLog trained without this log's city
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
const std::vector<Variant>& all_variants();

enum class Environment { kReactive, kLogReplay };
std::string to_string(Environment e);
Environment environment_from_string(const std::string& name);

struct ExperimentPlan {
  std::vector<Variant> variants = all_variants();
  std::vector<Environment> environments{Environment::kReactive};
  int folds = 5;                      // cross-fitting for the classifier variants
  std::uint64_t seed = 1;
  behavior::TrainOptions train;
  std::size_t repredict_every = 50;   // frames; 0 predicts once
  calibrate::ParameterGrid grid;      // for the city-level fits
  ClosedLoopOptions loop;
  int jobs = 0;
};

// Reads a JSON object; absent keys keep their defaults.
ExperimentPlan parse_experiment_plan(const std::string& json_text, const std::string& source);

struct SuiteInputs {
  std::vector<DrivingLog> logs;
  std::vector<BehaviorParams> truth;      // environment parameters per log
  std::vector<calibrate::LogFit> fits;    // per log, same order
  calibrate::ClusterModel clusters;       // over `fits`
};

struct ScenarioRow {
  std::string scenario_id;
  std::string city_tag;
  bool merge = false;  // lane graph contains a merge
  Variant variant = Variant::kConstantVelocity;
  Environment environment = Environment::kReactive;
  planner::ScoreBreakdown score;
  std::size_t plan_steps = 0;
  double plan_ms_total = 0.0;  // wall clock, not part of the deterministic outputs
  std::string error;
};

struct Aggregate {
  std::size_t count = 0;
  double mean_composite = 0.0;
  double collision_rate = 0.0;  // share of runs with an at-fault collision
  double mean_progress = 0.0;
};

Aggregate aggregate(const std::vector<const ScenarioRow*>& rows);

struct ClassifierSummary {
  double cross_fit_accuracy = 0.0;  // out-of-fold, against cluster labels
  double city_cross_fit_accuracy = 0.0;
  std::size_t examples = 0;
};

struct LatencySummary {
  std::size_t plan_steps = 0;
  double mean_ms = 0.0;
};

struct PlotData {
  std::map<std::string, scenario::GapHistogram> gaps_by_city;
  std::map<int, scenario::GapHistogram> gaps_by_cluster;
  std::vector<calibrate::LogFit> fits;
  std::vector<int> clusters;  // per fit
  std::vector<BehaviorParams> centroids;
};

// Min-gap histograms grouped by city tag and by the cluster of each log's fit.
PlotData build_plot_data(const std::vector<DrivingLog>& logs, const std::vector<calibrate::LogFit>& fits,
                         const calibrate::ClusterModel& clusters, int jobs = 0);

struct BenchmarkReport {
  std::vector<ScenarioRow> rows;  // sorted by (scenario_id, environment, variant)
  std::vector<Variant> variants;
  std::vector<Environment> environments;
  std::uint64_t seed = 0;
  int folds = 0;
  ClassifierSummary classifier;
  planner::PlannerConfig planner;

  PlotData plots;

  std::vector<const ScenarioRow*> select(Variant v, Environment e, const std::string& city = {},
                                         bool merge_only = false) const;
  std::vector<std::string> cities() const;
  std::map<std::pair<Environment, Variant>, LatencySummary> latency() const;
};

BenchmarkReport run_experiment_suite(const SuiteInputs& inputs, const ExperimentPlan& plan,
                                     const planner::PlannerConfig& config);

// Deterministic files: scores.csv, summary.json, report.md. Wall-clock
// measurements go to latency.json.
void write_report(const BenchmarkReport& report, const std::filesystem::path& dir);

// Plot data as CSV: per-city and per-cluster min-gap histograms and the
// fitted parameter scatter.
void emit_plots(const PlotData& plots, const std::filesystem::path& dir);
inline void emit_plots(const BenchmarkReport& report, const std::filesystem::path& dir) { emit_plots(report.plots, dir); }

// True when some segment has two or more predecessors.
bool has_merge(const scenario::LaneGraph& graph);

}  // namespace adaptive::bench
