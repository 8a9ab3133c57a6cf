#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adaptive/core/geometry.hpp"

namespace adaptive::scenario {

// The five IDM control parameters.
struct BehaviorParams {
  double target_velocity = 10.0;   // m/s
  double min_gap = 1.0;            // m
  double headway_time = 1.5;       // s
  double max_acceleration = 1.0;   // m/s^2
  double max_deceleration = 2.0;   // m/s^2 (comfortable)

  bool operator==(const BehaviorParams&) const = default;

  std::array<double, 5> to_array() const {
    return {target_velocity, min_gap, headway_time, max_acceleration, max_deceleration};
  }
  static BehaviorParams from_array(const std::array<double, 5>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  // Throws InvariantError unless every field is finite and strictly positive.
  void validate() const;
};

struct NamedArchetype {
  std::string name;
  BehaviorParams params;
};

BehaviorParams default_idm_params();
// PIT, BOS, SIN, LAS in that order.
const std::vector<NamedArchetype>& shipped_archetypes();
// Throws UsageError for unknown names; "DEFAULT" maps to default_idm_params().
BehaviorParams archetype_by_name(const std::string& name);

struct LaneSegment {
  int id = 0;
  std::vector<Vec2> centerline;
  double speed_limit = 12.0;
  std::vector<int> successors;
  std::optional<int> left;
  std::optional<int> right;

  double length() const;
};

struct LaneGraph {
  std::vector<LaneSegment> segments;  // sorted by id
  int goal_segment = 0;
  double lane_width = 3.5;

  const LaneSegment& segment(int id) const;
  bool contains(int id) const;
  std::vector<int> predecessors(int id) const;
  // Segments with no predecessor, ascending id.
  std::vector<int> sources() const;
  void validate() const;
};

struct AgentState {
  int id = 0;
  Pose2 pose;
  double speed = 0.0;
  double length = 4.5;
  double width = 2.0;
  double progress = 0.0;  // arc length along the agent's path

  bool operator==(const AgentState&) const = default;
};

Footprint footprint_of(const AgentState& agent);

using Frame = std::vector<AgentState>;

struct DrivingLog {
  std::string scenario_id;
  std::string city_tag;
  double dt = 0.1;
  int ego_id = 0;
  LaneGraph lane_graph;
  std::vector<Frame> frames;

  std::size_t horizon() const { return frames.size(); }
  // Pointer into frames[frame] or nullptr when the agent is absent.
  const AgentState* find(std::size_t frame, int agent_id) const;
  const AgentState& ego(std::size_t frame) const;
  void validate() const;
};

using PathPtr = std::shared_ptr<const Path>;

// Lane-segment chain an agent drives along: walk predecessors back to a
// source (lowest id first), then follow the first successor to a sink.
std::vector<int> lane_chain(const LaneGraph& graph, int segment_id);
PathPtr chain_path(const LaneGraph& graph, const std::vector<int>& chain);

// Segment whose centerline passes closest to `point`; ties go to the lower id.
int locate_segment(const LaneGraph& graph, const Vec2& point);

// Paths for every agent of frame 0 (ego included), keyed by position in the
// frame. Agents that start in the same lane chain share one Path object.
struct AgentPaths {
  std::vector<PathPtr> unique;        // distinct chains
  std::vector<std::size_t> index;     // per agent of frame 0 -> unique
  std::vector<std::vector<int>> chains;
};
AgentPaths assign_paths(const LaneGraph& graph, const Frame& frame);

}  // namespace adaptive::scenario
