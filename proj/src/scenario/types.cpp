#include "adaptive/scenario/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "adaptive/core/error.hpp"

namespace adaptive::scenario {

void BehaviorParams::validate() const {
  for (const double v : to_array()) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvariantError("behavior parameters must be strictly positive");
    }
  }
}

BehaviorParams default_idm_params() { return {10.0, 1.0, 1.5, 1.0, 2.0}; }

const std::vector<NamedArchetype>& shipped_archetypes() {
  static const std::vector<NamedArchetype> archetypes = {
      {"PIT", {10.0, 2.0, 0.5, 1.5, 3.0}},
      {"BOS", {10.0, 1.0, 1.5, 2.0, 3.5}},
      {"SIN", {10.0, 2.5, 1.5, 2.0, 1.0}},
      {"LAS", {10.0, 1.0, 0.5, 1.5, 0.5}},
  };
  return archetypes;
}

BehaviorParams archetype_by_name(const std::string& name) {
  if (name == "DEFAULT") return default_idm_params();
  for (const auto& a : shipped_archetypes()) {
    if (a.name == name) return a.params;
  }
  throw UsageError("unknown archetype '" + name + "'");
}

double LaneSegment::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < centerline.size(); ++i) total += (centerline[i] - centerline[i - 1]).norm();
  return total;
}

const LaneSegment& LaneGraph::segment(int id) const {
  const auto it = std::lower_bound(segments.begin(), segments.end(), id,
                                   [](const LaneSegment& s, int v) { return s.id < v; });
  if (it == segments.end() || it->id != id) {
    throw InvariantError("lane graph references unknown segment " + std::to_string(id));
  }
  return *it;
}

bool LaneGraph::contains(int id) const {
  const auto it = std::lower_bound(segments.begin(), segments.end(), id,
                                   [](const LaneSegment& s, int v) { return s.id < v; });
  return it != segments.end() && it->id == id;
}

std::vector<int> LaneGraph::predecessors(int id) const {
  std::vector<int> out;
  for (const auto& s : segments) {
    if (std::find(s.successors.begin(), s.successors.end(), id) != s.successors.end()) out.push_back(s.id);
  }
  return out;
}

std::vector<int> LaneGraph::sources() const {
  std::set<int> targets;
  for (const auto& s : segments) targets.insert(s.successors.begin(), s.successors.end());
  std::vector<int> out;
  for (const auto& s : segments) {
    if (!targets.contains(s.id)) out.push_back(s.id);
  }
  return out;
}

void LaneGraph::validate() const {
  if (segments.empty()) throw InvariantError("lane graph has no segments");
  if (!(lane_width > 0.0)) throw InvariantError("lane width must be positive");
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i - 1].id >= segments[i].id) throw InvariantError("lane segment ids must be unique and sorted");
  }
  for (const auto& s : segments) {
    if (s.centerline.size() < 2) throw InvariantError("centerline needs at least 2 points");
    for (std::size_t i = 1; i < s.centerline.size(); ++i) {
      if (s.centerline[i] == s.centerline[i - 1]) throw InvariantError("centerline has repeated consecutive points");
    }
    if (!(s.speed_limit > 0.0)) throw InvariantError("speed limit must be positive");
    for (const int succ : s.successors) {
      if (!contains(succ)) throw InvariantError("successor references unknown segment");
    }
    for (const auto& n : {s.left, s.right}) {
      if (n && !contains(*n)) throw InvariantError("neighbor references unknown segment");
    }
  }
  if (!contains(goal_segment)) throw InvariantError("goal segment does not exist");
}

Footprint footprint_of(const AgentState& agent) { return {agent.pose, agent.length, agent.width}; }

const AgentState* DrivingLog::find(std::size_t frame, int agent_id) const {
  for (const auto& a : frames.at(frame)) {
    if (a.id == agent_id) return &a;
  }
  return nullptr;
}

const AgentState& DrivingLog::ego(std::size_t frame) const {
  const AgentState* e = find(frame, ego_id);
  if (e == nullptr) throw InvariantError("frame " + std::to_string(frame) + " is missing the ego agent");
  return *e;
}

void DrivingLog::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvariantError("dt must be positive");
  if (frames.empty()) throw InvariantError("empty log");
  lane_graph.validate();
  std::vector<int> ids;
  for (const auto& a : frames.front()) ids.push_back(a.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw InvariantError("duplicate agent id in frame");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    std::vector<int> here;
    for (const auto& a : frames[k]) {
      here.push_back(a.id);
      if (!(a.speed >= 0.0)) throw InvariantError("agent speed must be non-negative");
      if (!(a.length > 0.0) || !(a.width > 0.0)) throw InvariantError("agent dimensions must be positive");
    }
    std::sort(here.begin(), here.end());
    if (here != ids) throw InvariantError("unstable agent id");
    ego(k);
  }
}

std::vector<int> lane_chain(const LaneGraph& graph, int segment_id) {
  std::vector<int> backward{segment_id};
  std::set<int> seen{segment_id};
  for (;;) {
    const auto preds = graph.predecessors(backward.back());
    if (preds.empty() || seen.contains(preds.front())) break;
    backward.push_back(preds.front());
    seen.insert(preds.front());
  }
  std::vector<int> chain(backward.rbegin(), backward.rend());
  for (;;) {
    const auto& succ = graph.segment(chain.back()).successors;
    if (succ.empty() || seen.contains(succ.front())) break;
    chain.push_back(succ.front());
    seen.insert(succ.front());
  }
  return chain;
}

PathPtr chain_path(const LaneGraph& graph, const std::vector<int>& chain) {
  std::vector<Vec2> points;
  std::vector<double> limits;
  std::vector<SegmentSpan> spans;
  double s = 0.0;
  for (const int id : chain) {
    const auto& seg = graph.segment(id);
    const double begin = s;
    for (std::size_t i = 0; i < seg.centerline.size(); ++i) {
      const Vec2& p = seg.centerline[i];
      if (!points.empty() && (p - points.back()).norm() < 1e-9) continue;
      if (!points.empty()) {
        s += (p - points.back()).norm();
        limits.push_back(seg.speed_limit);
      }
      points.push_back(p);
    }
    spans.push_back({id, begin, s});
  }
  return std::make_shared<const Path>(std::move(points), std::move(limits), std::move(spans));
}

int locate_segment(const LaneGraph& graph, const Vec2& point) {
  int best = graph.segments.front().id;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& seg : graph.segments) {
    for (std::size_t i = 0; i + 1 < seg.centerline.size(); ++i) {
      const Vec2 a = seg.centerline[i];
      const Vec2 d = seg.centerline[i + 1] - a;
      const double t = std::clamp((point - a).dot(d) / d.squared_norm(), 0.0, 1.0);
      const double dist = (point - (a + d * t)).norm();
      if (dist < best_d - 1e-9) {
        best_d = dist;
        best = seg.id;
      }
    }
  }
  return best;
}

AgentPaths assign_paths(const LaneGraph& graph, const Frame& frame) {
  AgentPaths out;
  std::map<std::vector<int>, std::size_t> by_chain;
  for (const auto& agent : frame) {
    auto chain = lane_chain(graph, locate_segment(graph, agent.pose.position()));
    auto [it, inserted] = by_chain.try_emplace(chain, out.unique.size());
    if (inserted) {
      out.unique.push_back(chain_path(graph, chain));
      out.chains.push_back(chain);
    }
    out.index.push_back(it->second);
  }
  return out;
}

}  // namespace adaptive::scenario
