#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "adaptive/bench/suite.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/scenario/log_io.hpp"

namespace adaptive::bench {

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string short_fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void append_aggregate(std::string& out, const Aggregate& a) {
  out += '{';
  append_json_key(out, "count");
  out += std::to_string(a.count) + ',';
  append_json_key(out, "mean_composite");
  append_fixed(out, a.mean_composite);
  out += ',';
  append_json_key(out, "collision_rate");
  append_fixed(out, a.collision_rate);
  out += ',';
  append_json_key(out, "mean_progress");
  append_fixed(out, a.mean_progress);
  out += '}';
}

// Per-city drop of the held-out classifier relative to the cross-fitted one.
struct Generalization {
  std::string city;
  double all_cities = 0.0;
  double held_out = 0.0;
};

std::vector<Generalization> generalization(const BenchmarkReport& r) {
  std::vector<Generalization> out;
  const bool present = std::find(r.variants.begin(), r.variants.end(), Variant::kAdaptiveLogHeldOut) != r.variants.end() &&
                       std::find(r.variants.begin(), r.variants.end(), Variant::kAdaptiveLog) != r.variants.end();
  if (!present) return out;
  for (const auto& city : r.cities()) {
    out.push_back({city, aggregate(r.select(Variant::kAdaptiveLog, Environment::kReactive, city)).mean_composite,
                   aggregate(r.select(Variant::kAdaptiveLogHeldOut, Environment::kReactive, city)).mean_composite});
  }
  return out;
}

std::string summary_json(const BenchmarkReport& r) {
  std::string out = "{\n  ";
  append_json_key(out, "seed");
  out += std::to_string(r.seed) + ",\n  ";
  append_json_key(out, "folds");
  out += std::to_string(r.folds) + ",\n  ";
  append_json_key(out, "scenarios");
  out += std::to_string(r.variants.empty() || r.environments.empty()
                            ? 0
                            : r.rows.size() / (r.variants.size() * r.environments.size())) +
         ",\n  ";
  append_json_key(out, "variants");
  out += '[';
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    if (i) out += ',';
    append_json_string(out, to_string(r.variants[i]));
  }
  out += "],\n  ";
  append_json_key(out, "environments");
  out += '[';
  for (std::size_t i = 0; i < r.environments.size(); ++i) {
    if (i) out += ',';
    append_json_string(out, to_string(r.environments[i]));
  }
  out += "],\n  ";
  append_json_key(out, "classifier");
  out += '{';
  append_json_key(out, "examples");
  out += std::to_string(r.classifier.examples) + ',';
  append_json_key(out, "cross_fit_accuracy");
  append_fixed(out, r.classifier.cross_fit_accuracy);
  out += ',';
  append_json_key(out, "city_cross_fit_accuracy");
  append_fixed(out, r.classifier.city_cross_fit_accuracy);
  out += "},\n  ";

  const auto cities = r.cities();
  auto section = [&](const char* name, auto&& rows_of) {
    append_json_key(out, name);
    out += "[";
    bool first = true;
    for (const Environment e : r.environments) {
      for (const Variant v : r.variants) {
        out += first ? "\n    " : ",\n    ";
        first = false;
        out += '{';
        append_json_key(out, "environment");
        append_json_string(out, to_string(e));
        out += ',';
        append_json_key(out, "variant");
        append_json_string(out, to_string(v));
        out += ',';
        rows_of(e, v);
        out += '}';
      }
    }
    out += "\n  ]";
  };
  section("overall", [&](Environment e, Variant v) {
    append_json_key(out, "aggregate");
    append_aggregate(out, aggregate(r.select(v, e)));
  });
  out += ",\n  ";
  section("merge_subset", [&](Environment e, Variant v) {
    append_json_key(out, "aggregate");
    append_aggregate(out, aggregate(r.select(v, e, {}, true)));
  });
  out += ",\n  ";
  section("per_city", [&](Environment e, Variant v) {
    append_json_key(out, "cities");
    out += '{';
    for (std::size_t c = 0; c < cities.size(); ++c) {
      if (c) out += ',';
      append_json_key(out, cities[c]);
      append_aggregate(out, aggregate(r.select(v, e, cities[c])));
    }
    out += '}';
  });
  out += ",\n  ";
  append_json_key(out, "generalization");
  out += '[';
  const auto gen = generalization(r);
  for (std::size_t i = 0; i < gen.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += '{';
    append_json_key(out, "city");
    append_json_string(out, gen[i].city);
    out += ',';
    append_json_key(out, "all_cities");
    append_fixed(out, gen[i].all_cities);
    out += ',';
    append_json_key(out, "held_out");
    append_fixed(out, gen[i].held_out);
    out += ',';
    append_json_key(out, "drop");
    append_fixed(out, gen[i].all_cities - gen[i].held_out);
    out += '}';
  }
  out += gen.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

std::string scores_csv(const BenchmarkReport& r) {
  std::string out =
      "scenario_id,city_tag,merge,environment,variant,collision,drivable_area,progress_ratio,speed_compliance,"
      "ttc_bounded,comfort,composite,plan_steps,error\n";
  for (const auto& row : r.rows) {
    out += csv_field(row.scenario_id) + ',' + csv_field(row.city_tag) + ',' + (row.merge ? "1" : "0") + ',' +
           to_string(row.environment) + ',' + to_string(row.variant);
    for (const double v : {row.score.collision, row.score.drivable_area, row.score.progress_ratio,
                           row.score.speed_compliance, row.score.ttc_bounded, row.score.comfort, row.score.composite}) {
      out += ',';
      append_fixed(out, v);
    }
    out += ',' + std::to_string(row.plan_steps) + ',' + csv_field(row.error) + '\n';
  }
  return out;
}

std::string report_md(const BenchmarkReport& r) {
  std::string out = "# Benchmark report\n\n";
  const std::size_t cells = r.variants.size() * r.environments.size();
  out += "Scenarios: " + std::to_string(cells ? r.rows.size() / cells : 0) + ". Seed: " + std::to_string(r.seed) +
         ". Classifier folds: " + std::to_string(r.folds) + ".\n";
  for (const Environment e : r.environments) {
    out += "\n## Environment: " + to_string(e) + "\n\n";
    out += "| variant | runs | mean composite | merge-subset composite | collision rate | mean progress |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const Variant v : r.variants) {
      const auto a = aggregate(r.select(v, e));
      const auto m = aggregate(r.select(v, e, {}, true));
      out += "| " + to_string(v) + " | " + std::to_string(a.count) + " | " + short_fixed(a.mean_composite) + " | " +
             (m.count ? short_fixed(m.mean_composite) : "n/a") + " | " + short_fixed(a.collision_rate) + " | " +
             short_fixed(a.mean_progress) + " |\n";
    }
    const auto cities = r.cities();
    out += "\nMean composite per city:\n\n| variant |";
    for (const auto& c : cities) out += " " + c + " |";
    out += "\n|---|";
    for (std::size_t c = 0; c < cities.size(); ++c) out += "---|";
    out += '\n';
    for (const Variant v : r.variants) {
      out += "| " + to_string(v) + " |";
      for (const auto& c : cities) out += " " + short_fixed(aggregate(r.select(v, e, c)).mean_composite) + " |";
      out += '\n';
    }
  }
  const auto gen = generalization(r);
  if (!gen.empty()) {
    out += "\n## Held-out city (reactive)\n\n| city | trained on all | held out | drop |\n|---|---|---|---|\n";
    for (const auto& g : gen) {
      out += "| " + g.city + " | " + short_fixed(g.all_cities) + " | " + short_fixed(g.held_out) + " | " +
             short_fixed(g.all_cities - g.held_out) + " |\n";
    }
  }
  out += "\n## Classifier\n\nOut-of-fold accuracy over " + std::to_string(r.classifier.examples) +
         " logs: clusters " + short_fixed(r.classifier.cross_fit_accuracy) + ", cities " +
         short_fixed(r.classifier.city_cross_fit_accuracy) + ".\n\nPlan-step latency is in latency.json.\n";
  return out;
}

std::string latency_json(const BenchmarkReport& r) {
  const auto lat = r.latency();
  std::string out = "{\n  ";
  append_json_key(out, "per_variant");
  out += '[';
  bool first = true;
  for (const auto& [key, s] : lat) {
    out += first ? "\n    " : ",\n    ";
    first = false;
    out += '{';
    append_json_key(out, "environment");
    append_json_string(out, to_string(key.first));
    out += ',';
    append_json_key(out, "variant");
    append_json_string(out, to_string(key.second));
    out += ',';
    append_json_key(out, "plan_steps");
    out += std::to_string(s.plan_steps) + ',';
    append_json_key(out, "mean_plan_ms");
    append_fixed(out, s.mean_ms);
    out += '}';
  }
  out += lat.empty() ? "]" : "\n  ]";
  // Reactive internal world against rails, both under the reactive environment.
  const auto cv = lat.find({Environment::kReactive, Variant::kConstantVelocity});
  const auto rt = lat.find({Environment::kReactive, Variant::kReactiveTruth});
  if (cv != lat.end() && rt != lat.end() && cv->second.mean_ms > 0.0) {
    out += ",\n  ";
    append_json_key(out, "reactive_over_constant_velocity");
    append_fixed(out, rt->second.mean_ms / cv->second.mean_ms);
  }
  out += "\n}\n";
  return out;
}

std::string histogram_csv(const scenario::GapHistogram& h) {
  std::string out = "bucket_lo,bucket_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    append_fixed(out, static_cast<double>(b) * h.bucket_width);
    out += ',';
    append_fixed(out, static_cast<double>(b + 1) * h.bucket_width);
    out += ',' + std::to_string(h.counts[b]) + '\n';
  }
  return out;
}

void append_mean(std::string& out, const scenario::GapHistogram& h) {
  if (h.total() == 0) {
    out += "nan";
  } else {
    append_fixed(out, h.mean());
  }
}

}  // namespace

void write_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  scenario::write_text_file(dir / "scores.csv", scores_csv(report));
  scenario::write_text_file(dir / "summary.json", summary_json(report));
  scenario::write_text_file(dir / "report.md", report_md(report));
  scenario::write_text_file(dir / "latency.json", latency_json(report));
  planner::save_planner_config(report.planner, dir / "planner.json");
}

void emit_plots(const PlotData& plots, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string summary = "group,key,samples,mean_gap\n";
  for (const auto& [city, h] : plots.gaps_by_city) {
    scenario::write_text_file(dir / ("min_gap_city_" + city + ".csv"), histogram_csv(h));
    summary += "city," + csv_field(city) + ',' + std::to_string(h.total()) + ',';
    append_mean(summary, h);
    summary += '\n';
  }
  for (const auto& [cluster, h] : plots.gaps_by_cluster) {
    scenario::write_text_file(dir / ("min_gap_cluster_" + std::to_string(cluster) + ".csv"), histogram_csv(h));
    summary += "cluster," + std::to_string(cluster) + ',' + std::to_string(h.total()) + ',';
    append_mean(summary, h);
    summary += '\n';
  }
  scenario::write_text_file(dir / "min_gap_summary.csv", summary);

  std::string scatter = "scenario_id,city_tag,cluster,target_velocity,min_gap,headway_time,max_acceleration,max_deceleration\n";
  for (std::size_t i = 0; i < plots.fits.size(); ++i) {
    const auto& f = plots.fits[i];
    scatter += csv_field(f.scenario_id) + ',' + csv_field(f.city_tag) + ',' +
               std::to_string(i < plots.clusters.size() ? plots.clusters[i] : -1);
    for (const double v : f.params.to_array()) {
      scatter += ',';
      append_fixed(scatter, v);
    }
    scatter += '\n';
  }
  scenario::write_text_file(dir / "theta_scatter.csv", scatter);

  std::string centroids = "cluster,target_velocity,min_gap,headway_time,max_acceleration,max_deceleration\n";
  for (std::size_t c = 0; c < plots.centroids.size(); ++c) {
    centroids += std::to_string(c);
    for (const double v : plots.centroids[c].to_array()) {
      centroids += ',';
      append_fixed(centroids, v);
    }
    centroids += '\n';
  }
  scenario::write_text_file(dir / "centroids.csv", centroids);
}

}  // namespace adaptive::bench
