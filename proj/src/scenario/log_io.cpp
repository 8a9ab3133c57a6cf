#include "adaptive/scenario/log_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"

namespace adaptive::scenario {

namespace {

using nlohmann::json;

void append_key(std::string& out, std::string_view key) {
  append_json_string(out, key);
  out.push_back(':');
}

void append_graph(std::string& out, const LaneGraph& graph) {
  out += '{';
  append_key(out, "lane_width");
  append_fixed(out, graph.lane_width);
  out += ',';
  append_key(out, "goal_segment");
  out += std::to_string(graph.goal_segment);
  out += ',';
  append_key(out, "segments");
  out += '[';
  for (std::size_t i = 0; i < graph.segments.size(); ++i) {
    const auto& s = graph.segments[i];
    if (i > 0) out += ',';
    out += '{';
    append_key(out, "id");
    out += std::to_string(s.id);
    out += ',';
    append_key(out, "speed_limit");
    append_fixed(out, s.speed_limit);
    out += ',';
    append_key(out, "successors");
    out += '[';
    for (std::size_t k = 0; k < s.successors.size(); ++k) {
      if (k > 0) out += ',';
      out += std::to_string(s.successors[k]);
    }
    out += "],";
    append_key(out, "left");
    out += s.left ? std::to_string(*s.left) : "null";
    out += ',';
    append_key(out, "right");
    out += s.right ? std::to_string(*s.right) : "null";
    out += ',';
    append_key(out, "centerline");
    out += '[';
    for (std::size_t k = 0; k < s.centerline.size(); ++k) {
      if (k > 0) out += ',';
      out += '[';
      append_fixed(out, s.centerline[k].x);
      out += ',';
      append_fixed(out, s.centerline[k].y);
      out += ']';
    }
    out += "]}";
  }
  out += "]}";
}

void append_agent(std::string& out, const AgentState& a) {
  out += '{';
  append_key(out, "id");
  out += std::to_string(a.id);
  const std::pair<std::string_view, double> fields[] = {
      {"x", a.pose.x},         {"y", a.pose.y},           {"heading", a.pose.heading},
      {"speed", a.speed},      {"length", a.length},      {"width", a.width},
      {"progress", a.progress}};
  for (const auto& [key, value] : fields) {
    out += ',';
    append_key(out, key);
    append_fixed(out, value);
  }
  out += '}';
}

// Field accessors that report the line number and field path on failure.
class Reader {
 public:
  Reader(const std::string& source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line_) + ": field '" + field + "': " + what);
  }

  const json& member(const json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
  }

  double number(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
  }

  int integer(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
  }

  std::string text(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_array()) fail(path + "." + key, "expected an array");
    return v;
  }

  std::optional<int> optional_integer(const json& obj, const char* key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer or null");
    return v.get<int>();
  }

 private:
  const std::string& source_;
  std::size_t line_;
};

json parse_line(std::string_view line, const std::string& source, std::size_t number) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ":" + std::to_string(number) + ": malformed JSON: " + e.what());
  }
}

LaneGraph read_graph(const Reader& r, const json& j) {
  LaneGraph graph;
  graph.lane_width = r.number(j, "lane_width", "lane_graph");
  graph.goal_segment = r.integer(j, "goal_segment", "lane_graph");
  const json& segments = r.array(j, "segments", "lane_graph");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string path = "lane_graph.segments[" + std::to_string(i) + "]";
    const json& s = segments[i];
    LaneSegment seg;
    seg.id = r.integer(s, "id", path);
    seg.speed_limit = r.number(s, "speed_limit", path);
    for (const auto& succ : r.array(s, "successors", path)) {
      if (!succ.is_number_integer()) r.fail(path + ".successors", "expected integers");
      seg.successors.push_back(succ.get<int>());
    }
    seg.left = r.optional_integer(s, "left", path);
    seg.right = r.optional_integer(s, "right", path);
    for (const auto& p : r.array(s, "centerline", path)) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        r.fail(path + ".centerline", "expected [x, y] pairs");
      }
      seg.centerline.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    graph.segments.push_back(std::move(seg));
  }
  return graph;
}

}  // namespace

std::string serialize_log(const DrivingLog& log) {
  log.validate();
  std::string out;
  out += '{';
  append_key(out, "scenario_id");
  append_json_string(out, log.scenario_id);
  out += ',';
  append_key(out, "city_tag");
  append_json_string(out, log.city_tag);
  out += ',';
  append_key(out, "dt");
  append_fixed(out, log.dt);
  out += ',';
  append_key(out, "horizon");
  out += std::to_string(log.horizon());
  out += ',';
  append_key(out, "ego_id");
  out += std::to_string(log.ego_id);
  out += ',';
  append_key(out, "lane_graph");
  append_graph(out, log.lane_graph);
  out += "}\n";
  for (std::size_t k = 0; k < log.frames.size(); ++k) {
    out += '{';
    append_key(out, "frame");
    out += std::to_string(k);
    out += ',';
    append_key(out, "agents");
    out += '[';
    for (std::size_t i = 0; i < log.frames[k].size(); ++i) {
      if (i > 0) out += ',';
      append_agent(out, log.frames[k][i]);
    }
    out += "]}\n";
  }
  return out;
}

DrivingLog parse_log(std::string_view text, const std::string& source) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string_view::npos) lines.pop_back();
  if (lines.empty()) throw ParseError(source + ": empty file");

  DrivingLog log;
  const json header = parse_line(lines[0], source, 1);
  const Reader hr(source, 1);
  log.scenario_id = hr.text(header, "scenario_id", "header");
  log.city_tag = hr.text(header, "city_tag", "header");
  log.dt = hr.number(header, "dt", "header");
  const int horizon = hr.integer(header, "horizon", "header");
  log.ego_id = hr.integer(header, "ego_id", "header");
  log.lane_graph = read_graph(hr, hr.member(header, "lane_graph", "header"));

  for (std::size_t n = 1; n < lines.size(); ++n) {
    const json j = parse_line(lines[n], source, n + 1);
    const Reader r(source, n + 1);
    const int index = r.integer(j, "frame", "frame");
    if (index != static_cast<int>(n - 1)) r.fail("frame", "expected frame index " + std::to_string(n - 1));
    Frame frame;
    const json& agents = r.array(j, "agents", "frame");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string path = "agents[" + std::to_string(i) + "]";
      const json& a = agents[i];
      AgentState s;
      s.id = r.integer(a, "id", path);
      s.pose.x = r.number(a, "x", path);
      s.pose.y = r.number(a, "y", path);
      s.pose.heading = r.number(a, "heading", path);
      s.speed = r.number(a, "speed", path);
      s.length = r.number(a, "length", path);
      s.width = r.number(a, "width", path);
      s.progress = r.number(a, "progress", path);
      frame.push_back(s);
    }
    log.frames.push_back(std::move(frame));
  }
  if (!(log.dt > 0.0)) throw InvariantError("dt must be positive");
  if (log.frames.empty()) throw InvariantError("empty log");
  if (horizon != static_cast<int>(log.frames.size())) {
    throw InvariantError("horizon does not match the number of frames");
  }
  log.validate();
  return log;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

DrivingLog load_log(const std::filesystem::path& path) { return parse_log(read_text_file(path), path.string()); }

void save_log(const DrivingLog& log, const std::filesystem::path& path) { write_text_file(path, serialize_log(log)); }

}  // namespace adaptive::scenario
