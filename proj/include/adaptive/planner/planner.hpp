#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "adaptive/scenario/types.hpp"
#include "adaptive/world/world.hpp"

namespace adaptive::planner {

using scenario::AgentState;
using scenario::BehaviorParams;
using scenario::LaneGraph;
using scenario::PathPtr;

struct ScoreWeights {
  double progress = 0.5;
  double speed = 0.2;
  double ttc = 0.2;
  double comfort = 0.1;
};

struct PlannerConfig {
  std::vector<double> speed_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> lateral_offsets{-1.0, 0.0, 1.0};
  ScoreWeights weights;
  int replan_interval = 5;       // frames
  std::size_t horizon = 40;      // frames per proposal
  double dt = 0.1;
  double ttc_bound = 1.0;        // s
  double ttc_step = 0.2;         // s
  double jerk_bound = 10.0;      // m/s^3
  double drivable_margin = 0.5;  // m beyond half a lane width
  double lateral_transition = 1.0;  // s to reach the proposal's offset
  double resample_spacing = 1.0;    // m
  bool lead_aware = true;           // proposals follow leads found in the world rollout
  BehaviorParams ego_params{15.0, 2.0, 1.0, 1.5, 3.0};

  void validate() const;
};

PlannerConfig load_planner_config(const std::filesystem::path& path);
void save_planner_config(const PlannerConfig& config, const std::filesystem::path& path);

// Shortest successor path (by segment length) from the segment under
// `start` to `goal_segment`, beginning at the projection of `start` and
// resampled at `spacing`.
Path centerline_search(const LaneGraph& graph, const Pose2& start, int goal_segment, double spacing = 1.0);

struct TrajectoryPoint {
  Pose2 pose;
  double speed = 0.0;
  double progress = 0.0;  // along the centerline
  double lateral = 0.0;
};

struct Proposal {
  double speed_fraction = 1.0;
  double lateral_offset = 0.0;
  std::vector<TrajectoryPoint> trajectory;  // frame 0 is the current state
};

struct EgoState {
  Pose2 pose;
  double speed = 0.0;
  double length = 4.5;
  double width = 2.0;
};

// One IDM unroll per (speed fraction, lateral offset), f-major. When `world`
// is given and the config is lead-aware, each unroll follows the nearest
// world agent ahead on its shifted centerline.
std::vector<Proposal> generate_proposals(const Path& centerline, const EgoState& ego, const PlannerConfig& config,
                                         const world::RolloutTrace* world = nullptr, double lane_width = 3.5);

struct ScoreBreakdown {
  double collision = 1.0;
  double drivable_area = 1.0;
  double progress_ratio = 0.0;
  double speed_compliance = 1.0;
  double ttc_bounded = 1.0;
  double comfort = 1.0;
  double composite = 0.0;
};

double composite_score(const ScoreBreakdown& s, const ScoreWeights& w);

// Scores an ego trajectory against a world trace of the same length.
// `progress_normalizer` is the arc length that counts as full progress.
ScoreBreakdown score_trajectory(const std::vector<TrajectoryPoint>& ego, double ego_length, double ego_width,
                                const world::RolloutTrace& world, const Path& centerline, const LaneGraph& graph,
                                const PlannerConfig& config, double progress_normalizer);

ScoreBreakdown score_proposal(const Proposal& p, const world::RolloutTrace& world, const Path& centerline,
                              const LaneGraph& graph, const PlannerConfig& config, double progress_normalizer,
                              double ego_length = 4.5, double ego_width = 2.0);

enum class WorldKind { kConstantVelocity, kReactive };

struct WorldEngine {
  WorldKind kind = WorldKind::kConstantVelocity;
  BehaviorParams params;  // used by kReactive

  static WorldEngine constant_velocity() { return {}; }
  static WorldEngine reactive(const BehaviorParams& p) { return {WorldKind::kReactive, p}; }
};

// Everything plan_step needs about the present moment.
struct PlanningScene {
  const LaneGraph* graph = nullptr;
  const Path* centerline = nullptr;
  const world::WorldPaths* paths = nullptr;  // agent paths + ego chain path
  scenario::Frame agents;                     // non-ego, ordered like paths->agent_paths
  AgentState ego;                             // progress along the ego chain path
};

struct PlanResult {
  Proposal selected;
  ScoreBreakdown score;
  std::size_t index = 0;
  std::vector<ScoreBreakdown> scores;  // per proposal
  world::RolloutTrace world;
};

PlanResult plan_step(const PlanningScene& scene, const WorldEngine& engine, const PlannerConfig& config);

// Index of the best proposal: composite, then progress, then |offset|, then speed fraction.
std::size_t select_best(const std::vector<Proposal>& proposals, const std::vector<ScoreBreakdown>& scores);

// Distance from `point` to the nearest lane centerline of `graph`.
double distance_to_lanes(const LaneGraph& graph, const Vec2& point);

}  // namespace adaptive::planner
