#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "adaptive/idm/idm.hpp"
#include "adaptive/scenario/types.hpp"

namespace adaptive::world {

using scenario::AgentState;
using scenario::BehaviorParams;
using scenario::DrivingLog;
using scenario::Frame;

// Spatial paths of a scene: one entry per non-ego agent plus the ego's.
struct WorldPaths {
  std::shared_ptr<const idm::PathNetwork> network;
  std::vector<std::size_t> agent_paths;
  std::size_t ego_path = 0;

  const Path& agent_path(std::size_t i) const { return network->path(agent_paths[i]); }
  const Path& ego_path_ref() const { return network->path(ego_path); }
};

// Paths for the agents of the log's first frame. Non-ego agents keep their
// frame-0 order.
WorldPaths paths_from_log(const DrivingLog& log);
Frame non_ego_agents(const DrivingLog& log, std::size_t frame);
std::vector<AgentState> ego_track(const DrivingLog& log);

struct RolloutTrace {
  double dt = 0.1;
  std::vector<Frame> frames;              // non-ego agents only
  std::optional<BehaviorParams> params;   // nullopt: constant velocity

  std::size_t horizon() const { return frames.size(); }
};

// Synchronous reactive IDM update: every agent observes frame t (others and
// the ego at its planned pose) before anyone moves.
class ReactiveWorld {
 public:
  ReactiveWorld(const WorldPaths& paths, Frame initial, BehaviorParams params, double dt);

  const Frame& agents() const { return agents_; }
  void step(const AgentState& ego);

 private:
  const WorldPaths& paths_;
  Frame agents_;
  Frame scratch_;
  BehaviorParams params_;
  double dt_;
  std::vector<idm::PathNetwork::Candidate> candidates_;
};

RolloutTrace rollout_reactive(const Frame& initial, const WorldPaths& paths,
                              std::span<const AgentState> ego_plan, const BehaviorParams& params,
                              std::size_t horizon, double dt);

RolloutTrace rollout_constant_velocity(const Frame& initial, const WorldPaths& paths,
                                       std::size_t horizon, double dt);

// Sum over frames and shared non-ego agents of the squared xy error.
double trace_distance(const RolloutTrace& sim, const DrivingLog& log);
double trace_distance(const RolloutTrace& a, const RolloutTrace& b);

}  // namespace adaptive::world
