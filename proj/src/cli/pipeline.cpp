#include "adaptive/cli/pipeline.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/core/parallel.hpp"
#include "adaptive/scenario/log_io.hpp"

namespace adaptive::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kReplacementSeeds = 5;

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

fs::path partial(const fs::path& p) { return fs::path(p.string() + ".partial"); }

// Writes through `p.partial` so a failed stage leaves an obviously
// incomplete artifact behind.
template <typename Write>
void staged_file(const fs::path& p, Write&& write) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  const fs::path tmp = partial(p);
  write(tmp);
  fs::rename(tmp, p);
}

template <typename Write>
void staged_dir(const fs::path& dir, Write&& write) {
  const fs::path tmp = partial(dir);
  fs::remove_all(tmp);
  write(tmp);
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(tmp)) {
    fs::rename(entry.path(), dir / entry.path().filename());
  }
  fs::remove_all(tmp);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_generate(const json& g, GenerateSettings& s) {
  read_if(g, "archetypes", s.archetypes);
  read_if(g, "count", s.count);
  read_if(g, "seed", s.seed);
  auto& c = s.generator;
  if (g.contains("lane_template")) c.lane_template = scenario::lane_template_from_string(g.at("lane_template").get<std::string>());
  read_if(g, "agent_count", c.agent_count);
  read_if(g, "horizon", c.horizon);
  read_if(g, "dt", c.dt);
  read_if(g, "param_noise", c.param_noise);
  read_if(g, "max_attempts", c.max_attempts);
  read_if(g, "lane_width", c.layout.lane_width);
  read_if(g, "speed_limit", c.layout.speed_limit);
  if (s.count < 0) throw UsageError("generate.count must be non-negative");
  for (const auto& name : s.archetypes) scenario::archetype_by_name(name);
}

void append_params(std::string& out, const scenario::BehaviorParams& p) {
  const auto v = p.to_array();
  append_fixed_array(out, v);
}

}  // namespace

planner::PlannerConfig PipelineConfig::planner() const {
  return planner_config.empty() ? planner::PlannerConfig{} : planner::load_planner_config(planner_config);
}

PipelineConfig default_pipeline_config(const fs::path& base) {
  PipelineConfig c;
  c.generate.generator.lane_template = scenario::LaneTemplate::kMixed;
  c.generate.generator.param_noise = 0.05;
  c.corpus_dir = base / c.corpus_dir;
  c.model_dir = base / c.model_dir;
  c.report_dir = base / c.report_dir;
  c.plot_dir = base / c.plot_dir;
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path, const fs::path& base) {
  PipelineConfig c = default_pipeline_config(base);
  const fs::path config_dir = path.parent_path();
  const std::string source = path.string();
  json j;
  try {
    j = json::parse(scenario::read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  try {
    if (j.contains("corpus_dir")) c.corpus_dir = resolve(base, j.at("corpus_dir").get<std::string>());
    if (j.contains("model_dir")) c.model_dir = resolve(base, j.at("model_dir").get<std::string>());
    if (j.contains("report_dir")) c.report_dir = resolve(base, j.at("report_dir").get<std::string>());
    if (j.contains("plot_dir")) c.plot_dir = resolve(base, j.at("plot_dir").get<std::string>());
    if (j.contains("planner_config")) c.planner_config = resolve(config_dir, j.at("planner_config").get<std::string>());
    if (j.contains("plot_script")) {
      const auto script = j.at("plot_script").get<std::string>();
      if (!script.empty()) c.plot_script = resolve(config_dir, script);
    }
    if (j.contains("generate")) apply_generate(j.at("generate"), c.generate);
    if (j.contains("grid")) c.grid = calibrate::parse_parameter_grid(j.at("grid").dump(), source + ": grid");
    read_if(j, "k", c.k);
    read_if(j, "seed", c.seed);
    read_if(j, "jobs", c.jobs);
    if (j.contains("train")) {
      const json& t = j.at("train");
      read_if(t, "epochs", c.train.epochs);
      read_if(t, "learning_rate", c.train.learning_rate);
      read_if(t, "batch_size", c.train.batch_size);
      read_if(t, "hidden", c.train.hidden);
    }
    if (j.contains("experiment")) c.experiment = bench::parse_experiment_plan(j.at("experiment").dump(), source + ": experiment");
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (c.k < 1) throw UsageError(source + ": k must be at least 1");
  if (c.train.epochs < 1 || !(c.train.learning_rate > 0.0) || c.train.batch_size == 0 || c.train.hidden == 0) {
    throw UsageError(source + ": invalid training options");
  }
  if (!c.planner_config.empty() && !fs::exists(c.planner_config)) {
    throw UsageError(source + ": planner config " + c.planner_config.string() + " does not exist");
  }
  c.grid.validate();
  return c;
}

std::vector<ManifestEntry> cmd_generate(const GenerateSettings& settings, const fs::path& out_dir, int jobs,
                                        std::ostream& log) {
  if (settings.count < 0) throw UsageError("count must be non-negative");
  std::vector<std::pair<std::string, int>> items;
  for (const auto& name : settings.archetypes) {
    scenario::archetype_by_name(name);
    for (int s = 0; s < settings.count; ++s) items.emplace_back(name, s);
  }
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> entries(items.size());
  std::vector<std::string> warnings(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& [name, index] = items[i];
    scenario::GeneratorConfig config = settings.generator;
    config.city_tag = name;
    const auto params = scenario::archetype_by_name(name);
    const std::uint64_t count = static_cast<std::uint64_t>(settings.count);
    for (int r = 0; r <= kReplacementSeeds; ++r) {
      const std::uint64_t seed = settings.seed + static_cast<std::uint64_t>(index) + count * static_cast<std::uint64_t>(r);
      try {
        const auto g = scenario::generate_scenario_detailed(params, seed, config);
        ManifestEntry& e = entries[i];
        e.file = g.log.scenario_id + ".log";
        e.scenario_id = g.log.scenario_id;
        e.city_tag = name;
        e.seed = seed;
        e.lane_template = scenario::to_string(g.lane_template);
        e.truth = g.truth;
        e.attempts = g.attempts;
        scenario::save_log(g.log, out_dir / e.file);
        return;
      } catch (const InvariantError& err) {
        warnings[i] += "warning: " + name + " seed " + std::to_string(seed) + " skipped (" + err.what() + ")\n";
      }
    }
    throw InvariantError("no feasible placement for " + name + " after " + std::to_string(kReplacementSeeds) +
                         " replacement seeds");
  });
  for (const auto& w : warnings) log << w;

  std::string manifest;
  for (const auto& e : entries) {
    manifest += '{';
    append_json_key(manifest, "file");
    append_json_string(manifest, e.file);
    manifest += ',';
    append_json_key(manifest, "scenario_id");
    append_json_string(manifest, e.scenario_id);
    manifest += ',';
    append_json_key(manifest, "city_tag");
    append_json_string(manifest, e.city_tag);
    manifest += ',';
    append_json_key(manifest, "seed");
    manifest += std::to_string(e.seed) + ',';
    append_json_key(manifest, "lane_template");
    append_json_string(manifest, e.lane_template);
    manifest += ',';
    append_json_key(manifest, "truth");
    append_params(manifest, e.truth);
    manifest += ',';
    append_json_key(manifest, "attempts");
    manifest += std::to_string(e.attempts) + "}\n";
  }
  scenario::write_text_file(out_dir / "manifest.jsonl", manifest);
  return entries;
}

Corpus load_corpus(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.jsonl";
  if (!fs::exists(manifest)) {
    throw UsageError("corpus directory '" + dir.string() +
                     "' has no manifest.jsonl; run the generate stage first (adaptive generate)");
  }
  const std::string text = scenario::read_text_file(manifest);
  std::vector<std::string> files;
  Corpus corpus;
  std::istringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.empty()) continue;
    const std::string where = manifest.string() + ":" + std::to_string(number);
    try {
      const json j = json::parse(line);
      files.push_back(j.at("file").get<std::string>());
      const auto v = j.at("truth").get<std::vector<double>>();
      if (v.size() != 5) throw ParseError(where + ": field 'truth': expected 5 values");
      corpus.truth.push_back(scenario::BehaviorParams::from_array({v[0], v[1], v[2], v[3], v[4]}));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  corpus.logs.resize(files.size());
  parallel_for(files.size(), 0, [&](std::size_t i) { corpus.logs[i] = scenario::load_log(dir / files[i]); });
  std::set<std::string> ids;
  for (const auto& log : corpus.logs) {
    if (!ids.insert(log.scenario_id).second) throw InvariantError("duplicate scenario id " + log.scenario_id);
  }
  return corpus;
}

std::vector<calibrate::LogFit> cmd_fit(const Corpus& corpus, const PipelineConfig& config) {
  auto fits = calibrate::fit_per_log(corpus.logs, config.grid, config.jobs);
  staged_file(config.model_dir / "fits.jsonl", [&](const fs::path& p) { calibrate::save_fits(fits, p); });
  return fits;
}

calibrate::ClusterModel cmd_cluster(const std::vector<calibrate::LogFit>& fits, const PipelineConfig& config) {
  std::vector<scenario::BehaviorParams> params;
  for (const auto& f : fits) params.push_back(f.params);
  auto model = calibrate::cluster_behaviors(params, config.k, config.seed);
  staged_file(config.model_dir / "clusters.json", [&](const fs::path& p) { calibrate::save_cluster_model(model, p); });
  return model;
}

void cmd_train(const Corpus& corpus, const std::vector<calibrate::LogFit>& fits, const calibrate::ClusterModel& clusters,
               const PipelineConfig& config) {
  if (corpus.logs.empty()) throw UsageError("cannot train on an empty corpus");
  if (fits.size() != corpus.logs.size() || clusters.assignments.size() != corpus.logs.size()) {
    throw UsageError("fits and clusters do not match the corpus; rerun fit and cluster");
  }
  std::vector<behavior::SceneFeatures> features(corpus.logs.size());
  parallel_for(corpus.logs.size(), config.jobs,
               [&](std::size_t i) { features[i] = behavior::extract_features(corpus.logs[i]); });

  std::vector<behavior::Example> data;
  for (std::size_t i = 0; i < features.size(); ++i) data.push_back({features[i], clusters.assignments[i]});
  const auto model = behavior::train_classifier(data, clusters.k, config.seed, config.train);

  std::set<std::string> city_set;
  for (const auto& log : corpus.logs) city_set.insert(log.city_tag);
  behavior::CityModel cities;
  cities.cities.assign(city_set.begin(), city_set.end());
  std::vector<behavior::Example> city_data;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto it = std::lower_bound(cities.cities.begin(), cities.cities.end(), corpus.logs[i].city_tag);
    city_data.push_back({features[i], static_cast<int>(it - cities.cities.begin())});
  }
  for (const auto& city : cities.cities) {
    std::vector<scenario::DrivingLog> subset;
    for (const auto& log : corpus.logs) {
      if (log.city_tag == city) subset.push_back(log);
    }
    cities.params.push_back(calibrate::fit_parameters(subset, config.grid, config.jobs).params);
  }
  const auto city_model =
      behavior::train_classifier(city_data, static_cast<int>(cities.cities.size()), config.seed, config.train);

  std::string city_text = "{";
  append_json_key(city_text, "cities");
  city_text += '[';
  for (std::size_t c = 0; c < cities.cities.size(); ++c) {
    if (c) city_text += ',';
    append_json_string(city_text, cities.cities[c]);
  }
  city_text += "],";
  append_json_key(city_text, "params");
  city_text += '[';
  for (std::size_t c = 0; c < cities.params.size(); ++c) {
    if (c) city_text += ',';
    append_params(city_text, cities.params[c]);
  }
  city_text += "]}\n";

  staged_file(config.model_dir / "classifier.json", [&](const fs::path& p) { behavior::save_classifier(model, p); });
  staged_file(config.model_dir / "city_classifier.json",
              [&](const fs::path& p) { behavior::save_classifier(city_model, p); });
  staged_file(config.model_dir / "cities.json", [&](const fs::path& p) { scenario::write_text_file(p, city_text); });
}

bench::BenchmarkReport cmd_bench(const Corpus& corpus, const std::vector<calibrate::LogFit>& fits,
                                 const calibrate::ClusterModel& clusters, const PipelineConfig& config) {
  bench::SuiteInputs in{corpus.logs, corpus.truth, fits, clusters};
  bench::ExperimentPlan plan = config.experiment;
  plan.train = config.train;
  plan.grid = config.grid;
  plan.seed = config.seed;
  plan.jobs = config.jobs;
  auto report = bench::run_experiment_suite(in, plan, config.planner());
  staged_dir(config.report_dir, [&](const fs::path& dir) { bench::write_report(report, dir); });
  return report;
}

void cmd_plot(const bench::PlotData& plots, const PipelineConfig& config, std::ostream& log) {
  staged_dir(config.plot_dir, [&](const fs::path& dir) { bench::emit_plots(plots, dir); });
  if (config.plot_script.empty()) return;
  const std::string command = "python3 \"" + config.plot_script.string() + "\" \"" + config.plot_dir.string() + "\"";
  if (std::system(command.c_str()) != 0) {
    log << "warning: plot rendering failed (" << command << "); plot data files are complete\n";
  }
}

namespace {

template <typename Body>
auto stage(const char* name, std::ostream& log, Body&& body) {
  log << "[" << name << "]\n";
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), exit_code_for(e));
  }
}

}  // namespace

void run_pipeline(const PipelineConfig& config, std::ostream& log) {
  const Corpus corpus = stage("load", log, [&] { return load_corpus(config.corpus_dir); });
  log << "corpus: " << corpus.logs.size() << " logs\n";
  const auto fits = stage("fit", log, [&] { return cmd_fit(corpus, config); });
  const auto clusters = stage("cluster", log, [&] { return cmd_cluster(fits, config); });
  stage("train", log, [&] {
    cmd_train(corpus, fits, clusters, config);
    return 0;
  });
  const auto report = stage("bench", log, [&] { return cmd_bench(corpus, fits, clusters, config); });
  stage("plot", log, [&] {
    cmd_plot(report.plots, config, log);
    return 0;
  });
  log << "report: " << (config.report_dir / "report.md").string() << "\n";
}

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return 1;
  }
  return 2;
}

}  // namespace adaptive::cli
