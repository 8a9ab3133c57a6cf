#include <json.hpp>

#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/scenario/log_io.hpp"

namespace adaptive::calibrate {

namespace {

using nlohmann::json;

BehaviorParams params_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 5) throw ParseError(where + ": expected 5 behavior parameters");
  std::array<double, 5> v{};
  for (std::size_t i = 0; i < 5; ++i) {
    if (!j[i].is_number()) throw ParseError(where + ": behavior parameter " + std::to_string(i) + " is not a number");
    v[i] = j[i].get<double>();
  }
  return BehaviorParams::from_array(v);
}

json parse_or_throw(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace

void save_fits(const std::vector<LogFit>& fits, const std::filesystem::path& path) {
  std::string out;
  for (const auto& f : fits) {
    out += '{';
    append_json_key(out, "scenario_id");
    append_json_string(out, f.scenario_id);
    out += ',';
    append_json_key(out, "city_tag");
    append_json_string(out, f.city_tag);
    out += ',';
    append_json_key(out, "params");
    const auto v = f.params.to_array();
    append_fixed_array(out, v);
    out += ',';
    append_json_key(out, "objective");
    append_fixed(out, f.objective);
    out += "}\n";
  }
  scenario::write_text_file(path, out);
}

std::vector<LogFit> load_fits(const std::filesystem::path& path) {
  const std::string text = scenario::read_text_file(path);
  std::vector<LogFit> out;
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (row.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line);
    const json j = parse_or_throw(row, where);
    try {
      out.push_back({j.at("scenario_id").get<std::string>(), j.at("city_tag").get<std::string>(),
                     params_from(j.at("params"), where), j.at("objective").get<double>()});
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  std::string out = "{";
  append_json_key(out, "k");
  out += std::to_string(model.k);
  out += ',';
  append_json_key(out, "mean");
  append_fixed_array(out, model.mean);
  out += ',';
  append_json_key(out, "stddev");
  append_fixed_array(out, model.stddev);
  out += ',';
  append_json_key(out, "centroids");
  out += '[';
  for (std::size_t c = 0; c < model.centroids.size(); ++c) {
    if (c > 0) out += ',';
    const auto v = model.centroids[c].to_array();
    append_fixed_array(out, v);
  }
  out += "],";
  append_json_key(out, "assignments");
  out += '[';
  for (std::size_t i = 0; i < model.assignments.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(model.assignments[i]);
  }
  out += "],";
  append_json_key(out, "iterations");
  out += std::to_string(model.iterations);
  out += "}\n";
  scenario::write_text_file(path, out);
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  const json j = parse_or_throw(scenario::read_text_file(path), path.string());
  ClusterModel m;
  try {
    m.k = j.at("k").get<int>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.stddev = j.at("stddev").get<std::vector<double>>();
    for (const auto& c : j.at("centroids")) m.centroids.push_back(params_from(c, path.string() + ": centroids"));
    m.assignments = j.at("assignments").get<std::vector<int>>();
    m.iterations = j.at("iterations").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (m.k < 1 || m.centroids.size() != static_cast<std::size_t>(m.k) || m.mean.size() != 5 || m.stddev.size() != 5) {
    throw InvariantError(path.string() + ": inconsistent cluster model");
  }
  for (const auto& c : m.centroids) c.validate();
  return m;
}

ParameterGrid parse_parameter_grid(const std::string& json_text, const std::string& source) {
  const json j = parse_or_throw(json_text, source);
  ParameterGrid grid;
  try {
    if (j.contains("target_velocity")) grid.target_velocity = j.at("target_velocity").get<double>();
    if (j.contains("min_gap")) grid.min_gap = j.at("min_gap").get<std::vector<double>>();
    if (j.contains("headway_time")) grid.headway_time = j.at("headway_time").get<std::vector<double>>();
    if (j.contains("max_acceleration")) grid.max_acceleration = j.at("max_acceleration").get<std::vector<double>>();
    if (j.contains("max_deceleration")) grid.max_deceleration = j.at("max_deceleration").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(source + ": grid: " + e.what());
  }
  grid.validate();
  return grid;
}

}  // namespace adaptive::calibrate
