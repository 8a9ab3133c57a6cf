#include <json.hpp>

#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/planner/planner.hpp"
#include "adaptive/scenario/log_io.hpp"

namespace adaptive::planner {

namespace {

using nlohmann::json;

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PlannerConfig load_planner_config(const std::filesystem::path& path) {
  PlannerConfig c;
  json j;
  try {
    j = json::parse(scenario::read_text_file(path));
    read_if(j, "speed_fractions", c.speed_fractions);
    read_if(j, "lateral_offsets", c.lateral_offsets);
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      read_if(w, "progress", c.weights.progress);
      read_if(w, "speed", c.weights.speed);
      read_if(w, "ttc", c.weights.ttc);
      read_if(w, "comfort", c.weights.comfort);
    }
    read_if(j, "replan_interval", c.replan_interval);
    read_if(j, "horizon", c.horizon);
    read_if(j, "dt", c.dt);
    read_if(j, "ttc_bound", c.ttc_bound);
    read_if(j, "ttc_step", c.ttc_step);
    read_if(j, "jerk_bound", c.jerk_bound);
    read_if(j, "drivable_margin", c.drivable_margin);
    read_if(j, "lateral_transition", c.lateral_transition);
    read_if(j, "resample_spacing", c.resample_spacing);
    read_if(j, "lead_aware", c.lead_aware);
    if (j.contains("ego_params")) {
      const auto v = j.at("ego_params").get<std::vector<double>>();
      if (v.size() != 5) throw ParseError(path.string() + ": ego_params needs 5 values");
      c.ego_params = {v[0], v[1], v[2], v[3], v[4]};
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void save_planner_config(const PlannerConfig& c, const std::filesystem::path& path) {
  std::string out = "{\n  ";
  append_json_key(out, "speed_fractions");
  append_fixed_array(out, c.speed_fractions);
  out += ",\n  ";
  append_json_key(out, "lateral_offsets");
  append_fixed_array(out, c.lateral_offsets);
  out += ",\n  \"weights\": {\"progress\": " + format_fixed(c.weights.progress) +
         ", \"speed\": " + format_fixed(c.weights.speed) + ", \"ttc\": " + format_fixed(c.weights.ttc) +
         ", \"comfort\": " + format_fixed(c.weights.comfort) + "},\n";
  out += "  \"replan_interval\": " + std::to_string(c.replan_interval) + ",\n";
  out += "  \"horizon\": " + std::to_string(c.horizon) + ",\n";
  out += "  \"dt\": " + format_fixed(c.dt) + ",\n";
  out += "  \"ttc_bound\": " + format_fixed(c.ttc_bound) + ",\n";
  out += "  \"ttc_step\": " + format_fixed(c.ttc_step) + ",\n";
  out += "  \"jerk_bound\": " + format_fixed(c.jerk_bound) + ",\n";
  out += "  \"drivable_margin\": " + format_fixed(c.drivable_margin) + ",\n";
  out += "  \"lateral_transition\": " + format_fixed(c.lateral_transition) + ",\n";
  out += "  \"resample_spacing\": " + format_fixed(c.resample_spacing) + ",\n";
  out += std::string("  \"lead_aware\": ") + (c.lead_aware ? "true" : "false") + ",\n  ";
  append_json_key(out, "ego_params");
  const auto v = c.ego_params.to_array();
  append_fixed_array(out, v);
  out += "\n}\n";
  scenario::write_text_file(path, out);
}

}  // namespace adaptive::planner
