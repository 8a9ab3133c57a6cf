// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaptive/behavior/behavior.hpp"
#include "adaptive/bench/suite.hpp"
#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/cli/pipeline.hpp"
#include "adaptive/core/random.hpp"
#include "adaptive/idm/idm.hpp"
#include "adaptive/scenario/generator.hpp"
#include "adaptive/scenario/log_io.hpp"
#include "adaptive/world/world.hpp"
#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using namespace adaptive;
using bench::Environment;
using bench::Variant;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kIdmTolerance = 1e-5;
constexpr double kIdmMaxSeconds = 1.0;
constexpr int kPlantedLogs = 50;
constexpr double kFitMaxSecondsPerLog = 10.0;
constexpr int kCitySeeds = 100;
constexpr int kPurityClusters = 16;
constexpr double kMinPurity = 0.9;
constexpr int kClassifierClusters = 4;
constexpr double kTrainShare = 0.8;
constexpr double kMinHoldOutAccuracy = 0.8;
constexpr double kMaxOracleGap = 0.5;
constexpr double kMaxGradientError = 1e-4;
constexpr std::size_t kMinScenarios = 200;
constexpr double kMaxSuiteSeconds = 15.0 * 60.0;
constexpr double kMaxHeldOutDrop = 1.0;
constexpr double kMaxLatencyRatio = 2.0;
constexpr int kSafetySeeds = 100;
constexpr int kSafetySteps = 10000;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome idm_oracle() {
  const auto t0 = Clock::now();
  const auto p = scenario::default_idm_params();
  const idm::LeadObservation lead{20.0, 0.0, true, 1};
  const double worked = idm::idm_acceleration(5.0, lead, p);
  const double free_start = idm::idm_acceleration(0.0, {}, p);
  const double at_target = idm::idm_acceleration(p.target_velocity, {}, p);
  // Hand-derived: s* = 1 + 5 * 1.5 = 8.5; 1 - 0.5^4 - (8.5/20)^2.
  const double expected = 1.0 - 0.0625 - 0.180625;
  const double err = std::abs(worked - expected);
  const double elapsed = seconds_since(t0);
  const bool pass = err <= kIdmTolerance && free_start == 1.0 && at_target == 0.0 && elapsed < kIdmMaxSeconds;
  return {pass, fmt("a(5; gap 20, dv 0) = %.6f vs %.6f (err %.1e, tol %.0e); a(0, free) = %g; a(v0, free) = %g; %.3f s",
                    worked, expected, err, kIdmTolerance, free_start, at_target, elapsed)};
}

Outcome plant_and_recover() {
  const calibrate::ParameterGrid grid;
  scenario::GeneratorConfig config;
  config.lane_template = scenario::LaneTemplate::kMixed;
  Rng rng(2024);
  int recovered = 0, planted = 0, skipped = 0;
  double worst_seconds = 0.0;
  for (std::uint64_t seed = 0; planted < kPlantedLogs; ++seed) {
    const auto index = rng.index(grid.size());
    const auto log = scenario::generate_scenario(grid.at(index), seed, config);
    if (!calibrate::is_informative(log)) {
      ++skipped;
      continue;
    }
    ++planted;
    const auto t0 = Clock::now();
    const auto fit = calibrate::fit_parameters({log}, grid, 1);
    worst_seconds = std::max(worst_seconds, seconds_since(t0));
    if (fit.grid_index == index) ++recovered;
  }
  const bool pass = recovered == planted && worst_seconds < kFitMaxSecondsPerLog;
  return {pass, fmt("%d/%d planted grid points recovered (%d uninformative draws skipped); slowest fit %.2f s on one "
                    "core (limit %.0f s)",
                    recovered, planted, skipped, worst_seconds, kFitMaxSecondsPerLog)};
}

Outcome city_gap_direction() {
  scenario::GeneratorConfig config;
  config.lane_template = scenario::LaneTemplate::kMixed;
  std::map<std::string, scenario::GapHistogram> gaps;
  for (const char* city : {"BOS", "PIT"}) {
    for (int seed = 0; seed < kCitySeeds; ++seed) {
      const auto log = scenario::generate_scenario(scenario::archetype_by_name(city), seed, config);
      gaps[city].merge(scenario::min_gap_stats(log));
    }
  }
  const double bos = gaps["BOS"].mean(), pit = gaps["PIT"].mean();
  return {bos < pit, fmt("mean ego min-gap over %d seeds: BOS %.3f m, PIT %.3f m (need BOS < PIT)", kCitySeeds, bos, pit)};
}

std::vector<std::string> truth_labels(const std::vector<calibrate::LogFit>& fits) {
  std::vector<std::string> labels;
  for (const auto& f : fits) labels.push_back(f.city_tag);
  return labels;
}

Outcome cluster_purity(const std::vector<calibrate::LogFit>& fits, std::uint64_t seed) {
  std::vector<scenario::BehaviorParams> params;
  for (const auto& f : fits) params.push_back(f.params);
  const auto model = calibrate::cluster_behaviors(params, kPurityClusters, seed);
  const auto labels = truth_labels(fits);
  const double min_purity = calibrate::min_cluster_purity(model.assignments, labels);
  const double overall = calibrate::cluster_purity(model.assignments, labels);
  bool monotone = true;
  for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
    monotone = monotone && model.inertia_history[i] <= model.inertia_history[i - 1] + 1e-12;
  }
  return {overall >= kMinPurity && monotone,
          fmt("K=%d over %zu fits: purity %.3f (need >= %.2f); smallest per-cluster majority share %.3f; inertia "
              "non-increasing over %zu steps: %s",
              kPurityClusters, fits.size(), overall, kMinPurity, min_purity, model.inertia_history.size(),
              monotone ? "yes" : "no")};
}

double max_gradient_error() {
  behavior::BehaviorClassifier model(kClassifierClusters, 16, 7);
  Rng rng(3);
  std::vector<behavior::Example> batch;
  for (int i = 0; i < 8; ++i) {
    behavior::Example e;
    for (auto& x : e.features) x = rng.uniform(0.0, 20.0);
    e.label = static_cast<int>(rng.index(kClassifierClusters));
    batch.push_back(e);
  }
  auto& params = model.parameters();
  for (auto& w : params) w += 0.05;
  std::vector<double> grad;
  model.loss(batch, &grad);
  double worst = 0.0;
  const double h = 1e-6;
  for (int n = 0; n < 20; ++n) {
    const auto i = rng.index(params.size());
    const double saved = params[i];
    params[i] = saved + h;
    const double up = model.loss(batch);
    params[i] = saved - h;
    const double down = model.loss(batch);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-8}));
  }
  return worst;
}

double hold_out_accuracy(const std::vector<behavior::Example>& data, std::uint64_t seed,
                         const behavior::TrainOptions& options) {
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto cut = static_cast<std::size_t>(kTrainShare * static_cast<double>(data.size()));
  std::vector<behavior::Example> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) (i < cut ? train : test).push_back(data[order[i]]);
  return behavior::accuracy(behavior::train_classifier(train, kClassifierClusters, seed, options), test);
}

double mean_composite(const bench::BenchmarkReport& report, Variant v, const std::string& city = {},
                      bool merge_only = false) {
  return bench::aggregate(report.select(v, Environment::kReactive, city, merge_only)).mean_composite;
}

Outcome classifier(const cli::Corpus& corpus, const std::vector<calibrate::LogFit>& fits,
                   const cli::PipelineConfig& config, const bench::BenchmarkReport& report) {
  std::vector<scenario::BehaviorParams> params;
  for (const auto& f : fits) params.push_back(f.params);
  const auto clusters = calibrate::cluster_behaviors(params, kClassifierClusters, config.seed);
  std::vector<behavior::Example> data;
  for (std::size_t i = 0; i < corpus.logs.size(); ++i) {
    data.push_back({behavior::extract_features(corpus.logs[i]), clusters.assignments[i]});
  }
  const double shipped = hold_out_accuracy(data, config.seed, config.train);
  const double defaults = hold_out_accuracy(data, config.seed, behavior::TrainOptions{});
  const double adaptive = mean_composite(report, Variant::kAdaptiveLog);
  const double oracle = mean_composite(report, Variant::kLogOracle);
  const double gap = oracle - adaptive;
  const double grad = max_gradient_error();
  const bool pass = shipped >= kMinHoldOutAccuracy && gap <= kMaxOracleGap && grad < kMaxGradientError;
  return {pass, fmt("K=%d hold-out accuracy %.3f with %d epochs at lr %g (need >= %.2f; %.3f with %d epochs at lr %g); "
                    "composite log_oracle %.3f vs adaptive_log %.3f, gap %.3f (limit %.1f); max gradient rel error "
                    "%.1e (limit %.0e)",
                    kClassifierClusters, shipped, config.train.epochs, config.train.learning_rate, kMinHoldOutAccuracy,
                    defaults, behavior::TrainOptions{}.epochs, behavior::TrainOptions{}.learning_rate, oracle, adaptive,
                    gap, kMaxOracleGap, grad, kMaxGradientError)};
}

Outcome closed_loop_gain(const bench::BenchmarkReport& report, double suite_seconds) {
  const auto scenarios = report.select(Variant::kAdaptiveLog, Environment::kReactive).size();
  const auto merges = report.select(Variant::kAdaptiveLog, Environment::kReactive, {}, true).size();
  const double cv = mean_composite(report, Variant::kConstantVelocity);
  const double adaptive = mean_composite(report, Variant::kAdaptiveLog);
  const double cv_merge = mean_composite(report, Variant::kConstantVelocity, {}, true);
  const double adaptive_merge = mean_composite(report, Variant::kAdaptiveLog, {}, true);
  const bool pass = scenarios >= kMinScenarios && adaptive >= cv && adaptive_merge > cv_merge &&
                    suite_seconds < kMaxSuiteSeconds;
  return {pass, fmt("%zu scenarios: adaptive_log %.4f vs constant_velocity %.4f (need >=); merge subset (%zu) %.4f vs "
                    "%.4f (need >); fit+bench %.0f s (limit %.0f s)",
                    scenarios, adaptive, cv, merges, adaptive_merge, cv_merge, suite_seconds, kMaxSuiteSeconds)};
}

Outcome held_out_drop(const bench::BenchmarkReport& report) {
  double worst = -1e300;
  std::string worst_city;
  std::ostringstream per_city;
  for (const auto& city : report.cities()) {
    const double drop =
        mean_composite(report, Variant::kAdaptiveLog, city) - mean_composite(report, Variant::kAdaptiveLogHeldOut, city);
    per_city << " " << city << fmt(" %+.3f", drop);
    if (drop > worst) {
      worst = drop;
      worst_city = city;
    }
  }
  return {worst <= kMaxHeldOutDrop,
          fmt("largest drop when the city is held out: %.3f (%s, limit %.1f); per city:", worst, worst_city.c_str(),
              kMaxHeldOutDrop) +
              per_city.str()};
}

Outcome latency(const bench::BenchmarkReport& report) {
  const auto table = report.latency();
  const double cv = table.at({Environment::kReactive, Variant::kConstantVelocity}).mean_ms;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [key, summary] : table) {
    if (key.second == Variant::kConstantVelocity) continue;
    if (summary.mean_ms / cv > worst) {
      worst = summary.mean_ms / cv;
      worst_name = bench::to_string(key.second);
    }
  }
  return {worst <= kMaxLatencyRatio,
          fmt("constant_velocity %.3f ms per planning step; slowest variant %s at %.2fx (limit %.1fx)", cv,
              worst_name.c_str(), worst, kMaxLatencyRatio)};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "latency.json") {
      out[fs::relative(e.path(), dir).generic_string()] = scenario::read_text_file(e.path());
    }
  }
  return out;
}

std::map<std::string, std::string> outputs(const cli::PipelineConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [tag, dir] : {std::pair{"models/", c.model_dir}, {"report/", c.report_dir}, {"plots/", c.plot_dir}}) {
    for (auto& [name, text] : tree(dir)) out[tag + name] = std::move(text);
  }
  return out;
}

Outcome determinism(const cli::PipelineConfig& first, const cli::PipelineConfig& second, std::ostream& log) {
  cli::cmd_generate(second.generate, second.corpus_dir, second.jobs, log);
  cli::run_pipeline(second, log);
  const auto a = outputs(first), b = outputs(second);
  std::size_t differing = 0;
  std::string example;
  for (const auto& [name, text] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != text) {
      ++differing;
      if (example.empty()) example = name;
    }
  }
  differing += b.size() > a.size() ? b.size() - a.size() : 0;
  const bool same_corpus = tree(first.corpus_dir) == tree(second.corpus_dir);
  return {differing == 0 && same_corpus && !a.empty(),
          fmt("%zu report, model and plot-data files compared (latency.json excluded): %zu differ%s%s; corpus "
              "identical: %s",
              a.size(), differing, example.empty() ? "" : ", first: ", example.c_str(), same_corpus ? "yes" : "no")};
}

Outcome two_agent_safety() {
  const auto& archetypes = scenario::shipped_archetypes();
  const double dt = 0.1;
  const auto path = testing::straight_path(12000.0);
  const auto paths = testing::shared_world_paths(path, 1);
  double closest = 1e300;
  int collisions = 0;
  for (int seed = 0; seed < kSafetySeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) + 7000);
    const auto p = archetypes[rng.index(archetypes.size())].params;
    double v_lead = rng.uniform(0.0, 10.0);
    const double v_follow = rng.uniform(0.0, 10.0);
    const double gap = p.min_gap + 2.0 + rng.uniform(0.0, 28.0) +
                       std::max(0.0, (v_follow * v_follow - v_lead * v_lead) / (4.0 * p.max_deceleration));
    world::ReactiveWorld world(paths, {testing::agent_on(*path, 1, 0.0, v_follow)}, p, dt);
    auto lead = testing::agent_on(*path, 0, gap + 4.5, v_lead);
    double target = v_lead;
    for (int step = 0; step < kSafetySteps; ++step) {
      if (step % 200 == 0) target = rng.uniform(0.0, 10.0);
      const double a = std::clamp(target - lead.speed, -p.max_deceleration, p.max_acceleration);
      lead = idm::step_agent(lead, a, dt, *path);
      world.step(lead);
      const auto& follower = world.agents().front();
      closest = std::min(closest, lead.progress - follower.progress - 4.5);
      if (footprints_overlap(scenario::footprint_of(follower), scenario::footprint_of(lead))) {
        ++collisions;
        break;
      }
    }
  }
  return {collisions == 0, fmt("%d/%d runs of %d steps collided; closest bumper gap %.3f m", collisions, kSafetySeeds,
                               kSafetySteps, closest)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string work_dir = "acceptance_work";
  std::string config_path = ADAPTIVE_SOURCE_DIR "/configs/pipeline.json";
  app.add_option("--work-dir", work_dir, "scratch directory for corpora and reports");
  app.add_option("--config", config_path, "pipeline configuration")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto report_line = [&](int id, const char* name, const Outcome& o) {
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " C" << id << " " << name << ": " << o.detail << std::endl;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("error: ") + e.what()};
    }
  };

  try {
    const fs::path root = fs::absolute(work_dir);
    fs::remove_all(root);
    auto config = cli::load_pipeline_config(config_path, root / "run_a");
    config.plot_script.clear();
    auto rerun = cli::load_pipeline_config(config_path, root / "run_b");
    rerun.plot_script.clear();

    report_line(1, "idm-oracle", guarded(idm_oracle));
    report_line(2, "plant-and-recover", guarded(plant_and_recover));
    report_line(3, "city-gap-direction", guarded(city_gap_direction));

    std::ostringstream log;
    cli::cmd_generate(config.generate, config.corpus_dir, config.jobs, log);
    const auto corpus = cli::load_corpus(config.corpus_dir);
    const auto t0 = Clock::now();
    const auto fits = cli::cmd_fit(corpus, config);
    const auto clusters = cli::cmd_cluster(fits, config);
    cli::cmd_train(corpus, fits, clusters, config);
    const auto bench_report = cli::cmd_bench(corpus, fits, clusters, config);
    const double suite_seconds = seconds_since(t0);
    cli::cmd_plot(bench_report.plots, config, log);

    report_line(4, "cluster-purity", guarded([&] { return cluster_purity(fits, config.seed); }));
    report_line(5, "behavior-classifier", guarded([&] { return classifier(corpus, fits, config, bench_report); }));
    report_line(6, "closed-loop-gain", guarded([&] { return closed_loop_gain(bench_report, suite_seconds); }));
    report_line(7, "held-out-city", guarded([&] { return held_out_drop(bench_report); }));
    report_line(8, "planning-latency", guarded([&] { return latency(bench_report); }));
    report_line(9, "pipeline-determinism", guarded([&] { return determinism(config, rerun, log); }));
    report_line(10, "two-agent-safety", guarded(two_agent_safety));
  } catch (const std::exception& e) {
    std::cout << "FAIL setup: " << e.what() << std::endl;
    return 2;
  }
  std::cout << (10 - failures) << "/10 criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
