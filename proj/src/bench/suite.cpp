#include "adaptive/bench/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <set>

#include <json.hpp>

#include "adaptive/core/error.hpp"
#include "adaptive/core/parallel.hpp"

namespace adaptive::bench {

namespace {

struct VariantName {
  Variant variant;
  const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::kConstantVelocity, "constant_velocity"},
    {Variant::kReactiveDefault, "reactive_default"},
    {Variant::kReactiveTruth, "reactive_truth"},
    {Variant::kLogOracle, "log_oracle"},
    {Variant::kAdaptiveLog, "adaptive_log"},
    {Variant::kAdaptiveCity, "adaptive_city"},
    {Variant::kCityOracle, "city_oracle"},
    {Variant::kAdaptiveLogHeldOut, "adaptive_log_held_out"},
};

}  // namespace

std::string to_string(Variant v) {
  for (const auto& n : kVariantNames) {
    if (n.variant == v) return n.name;
  }
  throw InvariantError("unknown variant");
}

Variant variant_from_string(const std::string& name) {
  for (const auto& n : kVariantNames) {
    if (name == n.name) return n.variant;
  }
  throw UsageError("unknown planner variant '" + name + "'");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> v;
    for (const auto& n : kVariantNames) v.push_back(n.variant);
    return v;
  }();
  return all;
}

std::string to_string(Environment e) { return e == Environment::kReactive ? "reactive" : "log_replay"; }

Environment environment_from_string(const std::string& name) {
  if (name == "reactive") return Environment::kReactive;
  if (name == "log_replay") return Environment::kLogReplay;
  throw UsageError("unknown environment '" + name + "' (expected reactive or log_replay)");
}

ExperimentPlan parse_experiment_plan(const std::string& json_text, const std::string& source) {
  using nlohmann::json;
  ExperimentPlan plan;
  try {
    const json j = json::parse(json_text);
    if (j.contains("variants")) {
      plan.variants.clear();
      for (const auto& v : j.at("variants")) plan.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (j.contains("environments")) {
      plan.environments.clear();
      for (const auto& e : j.at("environments")) plan.environments.push_back(environment_from_string(e.get<std::string>()));
    }
    if (j.contains("folds")) plan.folds = j.at("folds").get<int>();
    if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("repredict_every")) plan.repredict_every = j.at("repredict_every").get<std::size_t>();
    if (j.contains("start_frame")) plan.loop.start_frame = j.at("start_frame").get<std::size_t>();
    if (j.contains("train")) {
      const json& t = j.at("train");
      if (t.contains("epochs")) plan.train.epochs = t.at("epochs").get<int>();
      if (t.contains("learning_rate")) plan.train.learning_rate = t.at("learning_rate").get<double>();
      if (t.contains("batch_size")) plan.train.batch_size = t.at("batch_size").get<std::size_t>();
      if (t.contains("hidden")) plan.train.hidden = t.at("hidden").get<std::size_t>();
    }
    if (j.contains("grid")) plan.grid = calibrate::parse_parameter_grid(j.at("grid").dump(), source + ": grid");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (plan.folds < 2) throw UsageError(source + ": folds must be at least 2");
  if (plan.variants.empty()) throw UsageError(source + ": no planner variants");
  if (plan.environments.empty()) throw UsageError(source + ": no environments");
  if (plan.train.epochs < 1 || !(plan.train.learning_rate > 0.0) || plan.train.batch_size == 0) {
    throw UsageError(source + ": invalid training options");
  }
  return plan;
}

bool has_merge(const scenario::LaneGraph& graph) {
  return std::any_of(graph.segments.begin(), graph.segments.end(),
                     [&](const scenario::LaneSegment& s) { return graph.predecessors(s.id).size() >= 2; });
}

Aggregate aggregate(const std::vector<const ScenarioRow*>& rows) {
  Aggregate a;
  a.count = rows.size();
  if (rows.empty()) return a;
  double composite = 0.0, progress = 0.0;
  std::size_t collisions = 0;
  for (const auto* r : rows) {
    composite += r->score.composite;
    progress += r->score.progress_ratio;
    collisions += r->error.empty() && r->score.collision == 0.0;
  }
  const double n = static_cast<double>(rows.size());
  a.mean_composite = composite / n;
  a.mean_progress = progress / n;
  a.collision_rate = static_cast<double>(collisions) / n;
  return a;
}

std::vector<const ScenarioRow*> BenchmarkReport::select(Variant v, Environment e, const std::string& city,
                                                        bool merge_only) const {
  std::vector<const ScenarioRow*> out;
  for (const auto& r : rows) {
    if (r.variant != v || r.environment != e) continue;
    if (!city.empty() && r.city_tag != city) continue;
    if (merge_only && !r.merge) continue;
    out.push_back(&r);
  }
  return out;
}

std::vector<std::string> BenchmarkReport::cities() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.city_tag);
  return {s.begin(), s.end()};
}

std::map<std::pair<Environment, Variant>, LatencySummary> BenchmarkReport::latency() const {
  std::map<std::pair<Environment, Variant>, LatencySummary> out;
  std::map<std::pair<Environment, Variant>, double> total;
  for (const auto& r : rows) {
    auto& s = out[{r.environment, r.variant}];
    s.plan_steps += r.plan_steps;
    total[{r.environment, r.variant}] += r.plan_ms_total;
  }
  for (auto& [key, s] : out) s.mean_ms = s.plan_steps ? total[key] / static_cast<double>(s.plan_steps) : 0.0;
  return out;
}

PlotData build_plot_data(const std::vector<DrivingLog>& logs, const std::vector<calibrate::LogFit>& fits,
                         const calibrate::ClusterModel& clusters, int jobs) {
  if (fits.size() != logs.size()) throw UsageError("one fit per log required");
  if (!logs.empty() && clusters.assignments.size() != logs.size()) throw UsageError("one cluster label per log required");
  std::vector<scenario::GapHistogram> gaps(logs.size());
  parallel_for(logs.size(), jobs, [&](std::size_t i) { gaps[i] = scenario::min_gap_stats(logs[i]); });
  PlotData plots;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    plots.gaps_by_city[logs[i].city_tag].merge(gaps[i]);
    plots.gaps_by_cluster[clusters.assignments[i]].merge(gaps[i]);
  }
  for (int c = 0; c < clusters.k; ++c) plots.gaps_by_cluster[c];  // empty clusters still get a file
  plots.fits = fits;
  plots.clusters = clusters.assignments;
  plots.centroids = clusters.centroids;
  return plots;
}

namespace {

// Classifier variants need a prediction per log from a model that never saw
// that log (cross-fitting) or that log's city (held-out).
struct Predictions {
  std::vector<const behavior::BehaviorClassifier*> log_model;       // per log
  std::vector<const behavior::BehaviorClassifier*> city_model;      // per log
  std::vector<const behavior::BehaviorClassifier*> held_out_model;  // per log
  std::vector<std::unique_ptr<behavior::BehaviorClassifier>> storage;
  behavior::CityModel cities;
  ClassifierSummary summary;
};

bool needs(const ExperimentPlan& plan, Variant v) {
  return std::find(plan.variants.begin(), plan.variants.end(), v) != plan.variants.end();
}

Predictions train_predictors(const SuiteInputs& in, const std::vector<behavior::SceneFeatures>& features,
                             const ExperimentPlan& plan) {
  const std::size_t n = in.logs.size();
  Predictions p;
  p.log_model.assign(n, nullptr);
  p.city_model.assign(n, nullptr);
  p.held_out_model.assign(n, nullptr);
  if (n == 0) return p;

  std::set<std::string> city_set;
  for (const auto& log : in.logs) city_set.insert(log.city_tag);
  p.cities.cities.assign(city_set.begin(), city_set.end());
  std::vector<int> city_label(n);
  for (std::size_t i = 0; i < n; ++i) {
    city_label[i] = static_cast<int>(std::lower_bound(p.cities.cities.begin(), p.cities.cities.end(), in.logs[i].city_tag) -
                                     p.cities.cities.begin());
  }

  const bool city_variants = needs(plan, Variant::kAdaptiveCity) || needs(plan, Variant::kCityOracle);
  if (city_variants) {
    for (const auto& city : p.cities.cities) {
      std::vector<DrivingLog> subset;
      for (const auto& log : in.logs) {
        if (log.city_tag == city) subset.push_back(log);
      }
      p.cities.params.push_back(calibrate::fit_parameters(subset, plan.grid, plan.jobs).params);
    }
  }

  // Folds follow scenario id order so they do not depend on input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return in.logs[a].scenario_id < in.logs[b].scenario_id; });
  const std::size_t folds = std::min<std::size_t>(static_cast<std::size_t>(plan.folds), n);
  std::vector<std::size_t> fold(n);
  for (std::size_t r = 0; r < n; ++r) fold[order[r]] = r % folds;

  auto train = [&](auto&& include, const std::vector<int>& labels, int k, std::uint64_t seed) {
    std::vector<behavior::Example> data;
    for (const std::size_t i : order) {
      if (include(i)) data.push_back({features[i], labels[i]});
    }
    if (data.empty()) {
      for (const std::size_t i : order) data.push_back({features[i], labels[i]});
    }
    p.storage.push_back(std::make_unique<behavior::BehaviorClassifier>(behavior::train_classifier(data, k, seed, plan.train)));
    return p.storage.back().get();
  };

  std::size_t hits = 0, city_hits = 0;
  const bool log_variant = needs(plan, Variant::kAdaptiveLog);
  const bool city_variant = needs(plan, Variant::kAdaptiveCity);
  for (std::size_t f = 0; f < folds; ++f) {
    auto outside = [&](std::size_t i) { return fold[i] != f; };
    if (log_variant) {
      const auto* model = train(outside, in.clusters.assignments, in.clusters.k, plan.seed + f);
      for (std::size_t i = 0; i < n; ++i) {
        if (fold[i] != f) continue;
        p.log_model[i] = model;
        hits += model->predict(features[i]) == in.clusters.assignments[i];
      }
    }
    if (city_variant) {
      const auto* model = train(outside, city_label, static_cast<int>(p.cities.cities.size()), plan.seed + 100 + f);
      for (std::size_t i = 0; i < n; ++i) {
        if (fold[i] != f) continue;
        p.city_model[i] = model;
        city_hits += model->predict(features[i]) == city_label[i];
      }
    }
  }
  p.summary.examples = n;
  p.summary.cross_fit_accuracy = log_variant ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  p.summary.city_cross_fit_accuracy = city_variant ? static_cast<double>(city_hits) / static_cast<double>(n) : 0.0;

  if (needs(plan, Variant::kAdaptiveLogHeldOut)) {
    for (std::size_t c = 0; c < p.cities.cities.size(); ++c) {
      auto other_city = [&](std::size_t i) { return city_label[i] != static_cast<int>(c); };
      const auto* model = train(other_city, in.clusters.assignments, in.clusters.k, plan.seed + 200 + c);
      for (std::size_t i = 0; i < n; ++i) {
        if (city_label[i] == static_cast<int>(c)) p.held_out_model[i] = model;
      }
    }
  }
  return p;
}

InternalWorld internal_world(Variant v, std::size_t i, const SuiteInputs& in, const Predictions& pred,
                             const std::vector<behavior::SceneFeatures>& features, const ExperimentPlan& plan) {
  InternalWorld w;
  w.kind = planner::WorldKind::kReactive;
  w.repredict_every = plan.repredict_every;
  auto classify = [&](const behavior::BehaviorClassifier* model) {
    w.params = behavior::predict_behavior(*model, features[i], in.clusters);
    if (plan.repredict_every > 0) {
      const calibrate::ClusterModel* clusters = &in.clusters;
      w.repredict = [model, clusters](const DrivingLog& recent) {
        return behavior::predict_behavior(*model, behavior::extract_features(recent), *clusters);
      };
    }
  };
  const auto city_index = [&] {
    const auto& c = pred.cities.cities;
    return static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), in.logs[i].city_tag) - c.begin());
  };
  switch (v) {
    case Variant::kConstantVelocity:
      w.kind = planner::WorldKind::kConstantVelocity;
      break;
    case Variant::kReactiveDefault:
      w.params = scenario::default_idm_params();
      break;
    case Variant::kReactiveTruth:
      w.params = in.truth[i];
      break;
    case Variant::kLogOracle:
      w.params = in.fits[i].params;
      break;
    case Variant::kAdaptiveLog:
      classify(pred.log_model[i]);
      break;
    case Variant::kAdaptiveLogHeldOut:
      classify(pred.held_out_model[i]);
      break;
    case Variant::kAdaptiveCity: {
      const auto* model = pred.city_model[i];
      const behavior::CityModel* cities = &pred.cities;
      w.params = behavior::predict_city_behavior(*model, features[i], *cities);
      if (plan.repredict_every > 0) {
        w.repredict = [model, cities](const DrivingLog& recent) {
          return behavior::predict_city_behavior(*model, behavior::extract_features(recent), *cities);
        };
      }
      break;
    }
    case Variant::kCityOracle:
      w.params = pred.cities.params.at(city_index());
      break;
  }
  return w;
}

}  // namespace

BenchmarkReport run_experiment_suite(const SuiteInputs& in, const ExperimentPlan& input_plan,
                                     const planner::PlannerConfig& config) {
  const std::size_t n = in.logs.size();
  if (in.truth.size() != n || in.fits.size() != n) throw UsageError("suite inputs need one truth and one fit per log");
  if (n > 0 && in.clusters.assignments.size() != n) throw UsageError("cluster model does not cover the corpus");
  config.validate();
  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ids.insert(in.logs[i].scenario_id).second) throw InvariantError("duplicate scenario id " + in.logs[i].scenario_id);
    if (in.fits[i].scenario_id != in.logs[i].scenario_id) throw InvariantError("fit order differs from corpus order");
  }

  ExperimentPlan plan = input_plan;
  std::set<std::string> city_set;
  for (const auto& log : in.logs) city_set.insert(log.city_tag);
  if (city_set.size() < 2) {
    // A held-out city needs at least one other city to train on.
    std::erase(plan.variants, Variant::kAdaptiveLogHeldOut);
  }

  std::vector<behavior::SceneFeatures> features(n);
  parallel_for(n, plan.jobs, [&](std::size_t i) { features[i] = behavior::extract_features(in.logs[i]); });
  const Predictions pred = train_predictors(in, features, plan);

  std::vector<std::vector<ScenarioRow>> per_log(n);
  parallel_for(n, plan.jobs, [&](std::size_t i) {
    const DrivingLog& log = in.logs[i];
    const bool merge = has_merge(log.lane_graph);
    for (const Environment env : plan.environments) {
      ClosedLoopOptions options = plan.loop;
      options.reactive_environment = env == Environment::kReactive;
      for (const Variant v : plan.variants) {
        ScenarioRow row;
        row.scenario_id = log.scenario_id;
        row.city_tag = log.city_tag;
        row.merge = merge;
        row.variant = v;
        row.environment = env;
        ClosedLoopResult result;
        try {
          result = run_closed_loop(log, internal_world(v, i, in, pred, features, plan), in.truth[i], config, options);
        } catch (const std::exception& e) {
          result.score.collision = 0.0;
          result.score.composite = 0.0;
          result.error = e.what();
        }
        row.score = result.score;
        row.error = result.error;
        row.plan_steps = result.plan_ms.size();
        row.plan_ms_total = std::accumulate(result.plan_ms.begin(), result.plan_ms.end(), 0.0);
        per_log[i].push_back(std::move(row));
      }
    }
  });

  BenchmarkReport report;
  report.variants = plan.variants;
  report.environments = plan.environments;
  report.seed = plan.seed;
  report.folds = plan.folds;
  report.classifier = pred.summary;
  report.planner = config;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return in.logs[a].scenario_id < in.logs[b].scenario_id; });
  for (const std::size_t i : order) {
    for (auto& row : per_log[i]) report.rows.push_back(std::move(row));
  }
  report.plots = build_plot_data(in.logs, in.fits, in.clusters, plan.jobs);
  return report;
}

}  // namespace adaptive::bench
