#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "adaptive/behavior/behavior.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/idm/idm.hpp"

namespace adaptive::behavior {

const std::array<const char*, kFeatureCount>& feature_names() {
  static const std::array<const char*, kFeatureCount> names = {
      "speed_mean.mean",    "speed_mean.min",    "speed_mean.max",    "accel_max.mean",    "accel_max.min",
      "accel_max.max",      "gap_mean.mean",     "gap_mean.min",      "gap_mean.max",      "gap_min.mean",
      "gap_min.min",        "gap_min.max",       "headway_mean.mean", "headway_mean.min",  "headway_mean.max",
      "approach_var.mean",  "approach_var.min",  "approach_var.max",  "lane_count",        "speed_limit_mean",
      "curvature_mean",     "agent_count"};
  return names;
}

namespace {

struct AgentStats {
  double mean_speed = 0.0;
  double max_abs_accel = 0.0;
  double mean_gap = kNoLeadGap;
  double min_gap = kNoLeadGap;
  double mean_headway = kHeadwayCap;
  double approach_variance = 0.0;

  std::array<double, 6> values() const {
    return {mean_speed, max_abs_accel, mean_gap, min_gap, mean_headway, approach_variance};
  }
};

double mean_curvature(const scenario::LaneGraph& graph) {
  double turning = 0.0, length = 0.0;
  for (const auto& seg : graph.segments) {
    const auto& c = seg.centerline;
    for (std::size_t i = 1; i < c.size(); ++i) {
      length += (c[i] - c[i - 1]).norm();
      if (i >= 2) {
        const Vec2 a = c[i - 1] - c[i - 2];
        const Vec2 b = c[i] - c[i - 1];
        turning += std::abs(std::atan2(a.cross(b), a.dot(b)));
      }
    }
  }
  return length > 0.0 ? turning / length : 0.0;
}

}  // namespace

SceneFeatures extract_window(const DrivingLog& log, std::size_t begin, std::size_t frames) {
  const std::size_t end = std::min(log.horizon(), begin + frames);
  if (end <= begin || end - begin < 2) throw UsageError("feature extraction needs at least 2 frames");
  const double dt = log.dt;

  const auto assigned = scenario::assign_paths(log.lane_graph, log.frames[begin]);
  const idm::PathNetwork network(assigned.unique, log.lane_graph.lane_width);
  std::unordered_map<int, std::size_t> path_of;
  for (std::size_t i = 0; i < log.frames[begin].size(); ++i) path_of[log.frames[begin][i].id] = assigned.index[i];

  // Agents near the ego at the end of the window.
  const scenario::AgentState& ego_last = log.ego(end - 1);
  std::vector<int> ids;
  for (const auto& a : log.frames[end - 1]) {
    if (a.id == log.ego_id) continue;
    if ((a.pose.position() - ego_last.pose.position()).norm() <= kContextRadius) ids.push_back(a.id);
  }
  std::sort(ids.begin(), ids.end());
  std::unordered_map<int, std::size_t> slot;
  for (std::size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = i;

  std::vector<std::vector<double>> speed(ids.size()), gap(ids.size()), approach(ids.size());
  std::vector<idm::PathNetwork::Candidate> candidates;
  for (std::size_t k = begin; k < end; ++k) {
    const auto& frame = log.frames[k];
    candidates.clear();
    for (const auto& a : frame) candidates.push_back({&a, path_of.at(a.id)});
    for (const auto& a : frame) {
      const auto it = slot.find(a.id);
      if (it == slot.end()) continue;
      speed[it->second].push_back(a.speed);
      const auto lead = network.find_lead(a, path_of.at(a.id), candidates);
      gap[it->second].push_back(lead.exists ? std::min(lead.gap, kNoLeadGap) : kNoLeadGap);
      if (lead.exists) approach[it->second].push_back(lead.approach_rate);
    }
  }

  std::vector<AgentStats> stats(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& v = speed[i];
    AgentStats& s = stats[i];
    s.mean_speed = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() == 2) {
      s.max_abs_accel = std::abs(v[1] - v[0]) / dt;
    } else {
      for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        s.max_abs_accel = std::max(s.max_abs_accel, std::abs(v[k + 1] - v[k - 1]) / (2.0 * dt));
      }
    }
    double gap_sum = 0.0, headway_sum = 0.0;
    s.min_gap = kNoLeadGap;
    for (std::size_t k = 0; k < gap[i].size(); ++k) {
      const double g = gap[i][k];
      gap_sum += g;
      s.min_gap = std::min(s.min_gap, g);
      const bool has_lead = g < kNoLeadGap;
      headway_sum += has_lead && v[k] > 1e-9 ? std::min(g / v[k], kHeadwayCap) : kHeadwayCap;
    }
    s.mean_gap = gap_sum / static_cast<double>(gap[i].size());
    s.mean_headway = headway_sum / static_cast<double>(gap[i].size());
    const auto& dv = approach[i];
    if (dv.size() >= 2) {
      const double mu = std::accumulate(dv.begin(), dv.end(), 0.0) / static_cast<double>(dv.size());
      double var = 0.0;
      for (const double x : dv) var += (x - mu) * (x - mu);
      s.approach_variance = var / static_cast<double>(dv.size());
    }
  }

  SceneFeatures f{};
  const AgentStats defaults;
  for (std::size_t stat = 0; stat < 6; ++stat) {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    if (stats.empty()) {
      sum = lo = hi = defaults.values()[stat];
    } else {
      lo = hi = stats[0].values()[stat];
      for (const auto& s : stats) {
        const double x = s.values()[stat];
        sum += x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      sum /= static_cast<double>(stats.size());
    }
    f[3 * stat] = sum;
    f[3 * stat + 1] = lo;
    f[3 * stat + 2] = hi;
  }
  const auto& graph = log.lane_graph;
  f[18] = static_cast<double>(graph.sources().size());
  double limit_sum = 0.0;
  for (const auto& seg : graph.segments) limit_sum += seg.speed_limit;
  f[19] = limit_sum / static_cast<double>(graph.segments.size());
  f[20] = mean_curvature(graph);
  f[21] = static_cast<double>(ids.size());
  return f;
}

SceneFeatures extract_features(const DrivingLog& log) { return extract_window(log, 0, kHistoryFrames); }

}  // namespace adaptive::behavior
