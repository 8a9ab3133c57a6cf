#include "adaptive/world/world.hpp"

#include <cmath>
#include <unordered_map>

#include "adaptive/core/error.hpp"

namespace adaptive::world {

WorldPaths paths_from_log(const DrivingLog& log) {
  const Frame& first = log.frames.at(0);
  const auto assigned = scenario::assign_paths(log.lane_graph, first);
  WorldPaths out;
  out.network = std::make_shared<idm::PathNetwork>(assigned.unique, log.lane_graph.lane_width);
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i].id == log.ego_id) {
      out.ego_path = assigned.index[i];
    } else {
      out.agent_paths.push_back(assigned.index[i]);
    }
  }
  return out;
}

Frame non_ego_agents(const DrivingLog& log, std::size_t frame) {
  Frame out;
  for (const auto& a : log.frames.at(frame)) {
    if (a.id != log.ego_id) out.push_back(a);
  }
  return out;
}

std::vector<AgentState> ego_track(const DrivingLog& log) {
  std::vector<AgentState> out;
  out.reserve(log.horizon());
  for (std::size_t k = 0; k < log.horizon(); ++k) out.push_back(log.ego(k));
  return out;
}

ReactiveWorld::ReactiveWorld(const WorldPaths& paths, Frame initial, BehaviorParams params, double dt)
    : paths_(paths), agents_(std::move(initial)), params_(params), dt_(dt) {
  if (agents_.size() != paths_.agent_paths.size()) throw UsageError("one path per agent required");
  scratch_.resize(agents_.size());
  candidates_.reserve(agents_.size() + 1);
}

void ReactiveWorld::step(const AgentState& ego) {
  candidates_.clear();
  for (std::size_t i = 0; i < agents_.size(); ++i) candidates_.push_back({&agents_[i], paths_.agent_paths[i]});
  candidates_.push_back({&ego, paths_.ego_path});
  const auto& network = *paths_.network;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentState& a = agents_[i];
    const Path& path = network.path(paths_.agent_paths[i]);
    if (a.progress >= path.length()) {
      scratch_[i] = a;
      continue;
    }
    const auto lead = network.find_lead(a, paths_.agent_paths[i], candidates_);
    const double accel = idm::idm_acceleration(a.speed, lead, params_, path.speed_limit_at(a.progress));
    scratch_[i] = idm::step_agent(a, accel, dt_, path);
  }
  agents_.swap(scratch_);
}

RolloutTrace rollout_reactive(const Frame& initial, const WorldPaths& paths,
                              std::span<const AgentState> ego_plan, const BehaviorParams& params,
                              std::size_t horizon, double dt) {
  if (ego_plan.size() != horizon) throw UsageError("ego plan must cover the horizon");
  RolloutTrace trace;
  trace.dt = dt;
  trace.params = params;
  if (horizon == 0) return trace;
  trace.frames.reserve(horizon);
  ReactiveWorld world(paths, initial, params, dt);
  trace.frames.push_back(world.agents());
  for (std::size_t t = 0; t + 1 < horizon; ++t) {
    world.step(ego_plan[t]);
    trace.frames.push_back(world.agents());
  }
  return trace;
}

RolloutTrace rollout_constant_velocity(const Frame& initial, const WorldPaths& paths,
                                       std::size_t horizon, double dt) {
  if (initial.size() != paths.agent_paths.size()) throw UsageError("one path per agent required");
  RolloutTrace trace;
  trace.dt = dt;
  if (horizon == 0) return trace;
  trace.frames.reserve(horizon);
  trace.frames.push_back(initial);
  for (std::size_t t = 1; t < horizon; ++t) {
    Frame next = trace.frames.back();
    for (std::size_t i = 0; i < next.size(); ++i) {
      const Path& path = paths.agent_path(i);
      const double speed = initial[i].speed;
      next[i].progress = std::min(path.length(), initial[i].progress + speed * dt * static_cast<double>(t));
      next[i].pose = path.pose_at(next[i].progress);
    }
    trace.frames.push_back(std::move(next));
  }
  return trace;
}

namespace {

void check_compatible(double dt_a, std::size_t h_a, double dt_b, std::size_t h_b) {
  if (std::abs(dt_a - dt_b) > 1e-9) throw UsageError("trace_distance: dt mismatch");
  if (h_a != h_b) throw UsageError("trace_distance: horizon mismatch");
}

double frame_distance(const Frame& sim, const Frame& ref, int skip_id) {
  std::unordered_map<int, const AgentState*> by_id;
  for (const auto& a : ref) by_id.emplace(a.id, &a);
  double total = 0.0;
  for (const auto& a : sim) {
    if (a.id == skip_id) continue;
    const auto it = by_id.find(a.id);
    if (it == by_id.end()) continue;
    const double dx = a.pose.x - it->second->pose.x;
    const double dy = a.pose.y - it->second->pose.y;
    total += dx * dx + dy * dy;
  }
  return total;
}

}  // namespace

double trace_distance(const RolloutTrace& sim, const DrivingLog& log) {
  check_compatible(sim.dt, sim.horizon(), log.dt, log.horizon());
  double total = 0.0;
  for (std::size_t k = 0; k < sim.frames.size(); ++k) total += frame_distance(sim.frames[k], log.frames[k], log.ego_id);
  return total;
}

double trace_distance(const RolloutTrace& a, const RolloutTrace& b) {
  check_compatible(a.dt, a.horizon(), b.dt, b.horizon());
  double total = 0.0;
  for (std::size_t k = 0; k < a.frames.size(); ++k) total += frame_distance(a.frames[k], b.frames[k], -1);
  return total;
}

}  // namespace adaptive::world
