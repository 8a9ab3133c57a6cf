#pragma once

#include <memory>
#include <vector>

#include "adaptive/core/geometry.hpp"
#include "adaptive/scenario/types.hpp"
#include "adaptive/world/world.hpp"

namespace adaptive::testing {

inline scenario::PathPtr straight_path(double length, double speed_limit = 12.0) {
  return std::make_shared<const Path>(std::vector<Vec2>{{0.0, 0.0}, {length, 0.0}}, std::vector<double>{speed_limit});
}

inline scenario::AgentState agent_on(const Path& path, int id, double progress, double speed, double length = 4.5) {
  scenario::AgentState a;
  a.id = id;
  a.progress = progress;
  a.speed = speed;
  a.length = length;
  a.pose = path.pose_at(progress);
  return a;
}

// One straight segment along +x, id 0, goal 0.
inline scenario::LaneGraph straight_graph(double length, double speed_limit = 12.0) {
  scenario::LaneGraph g;
  scenario::LaneSegment s;
  s.id = 0;
  s.centerline = {{0.0, 0.0}, {length, 0.0}};
  s.speed_limit = speed_limit;
  g.segments.push_back(s);
  g.goal_segment = 0;
  return g;
}

// Straight-road log whose frames hold the given agents (ego id 0 first).
inline scenario::DrivingLog straight_log(double length, std::vector<scenario::Frame> frames, double speed_limit = 12.0) {
  scenario::DrivingLog log;
  log.scenario_id = "T_0";
  log.city_tag = "T";
  log.lane_graph = straight_graph(length, speed_limit);
  log.frames = std::move(frames);
  return log;
}

// Non-ego agents all on `path` (index 0), ego on the same path.
inline world::WorldPaths shared_world_paths(const scenario::PathPtr& path, std::size_t agents, double lane_width = 3.5) {
  world::WorldPaths w;
  w.network = std::make_shared<idm::PathNetwork>(std::vector<scenario::PathPtr>{path}, lane_width);
  w.agent_paths.assign(agents, 0);
  w.ego_path = 0;
  return w;
}

}  // namespace adaptive::testing
