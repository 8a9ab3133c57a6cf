#include "adaptive/bench/closed_loop.hpp"

#include <chrono>
#include <unordered_map>

#include "adaptive/core/error.hpp"
#include "adaptive/world/world.hpp"

namespace adaptive::bench {

namespace {

// Agents of `frame` in the order of the log's first frame (ego excluded).
scenario::Frame ordered_agents(const DrivingLog& log, std::size_t frame) {
  std::unordered_map<int, const scenario::AgentState*> by_id;
  for (const auto& a : log.frames.at(frame)) by_id.emplace(a.id, &a);
  scenario::Frame out;
  for (const auto& a : log.frames.front()) {
    if (a.id != log.ego_id) out.push_back(*by_id.at(a.id));
  }
  return out;
}

double progress_on(const Path& path, const Vec2& p, double hint) {
  return path.project(p, path.segment_at(hint - 5.0), path.segment_at(hint + 25.0)).s;
}

ClosedLoopResult run(const DrivingLog& log, const InternalWorld& internal, const BehaviorParams& world_truth,
                     const planner::PlannerConfig& config, const ClosedLoopOptions& options) {
  config.validate();
  if (std::abs(log.dt - config.dt) > 1e-9) throw UsageError("planner dt differs from log dt");
  if (log.horizon() < 2) throw UsageError("log too short for closed loop");
  const std::size_t last = log.horizon() - 1;
  const std::size_t start = std::min(options.start_frame, last - 1);

  const world::WorldPaths paths = world::paths_from_log(log);
  const Path& lane = paths.ego_path_ref();
  const scenario::AgentState ego0 = log.ego(start);
  const Path centerline =
      planner::centerline_search(log.lane_graph, ego0.pose, log.lane_graph.goal_segment, config.resample_spacing);

  ClosedLoopResult out;
  std::optional<world::ReactiveWorld> env;
  if (options.reactive_environment) env.emplace(paths, ordered_agents(log, start), world_truth, log.dt);
  auto env_agents = [&](std::size_t frame) { return env ? env->agents() : ordered_agents(log, frame); };

  scenario::AgentState ego = ego0;
  const auto p0 = centerline.project(ego0.pose.position());
  out.executed.push_back({ego0.pose, ego0.speed, p0.s, p0.lateral});
  out.environment.push_back(env_agents(start));

  // History window handed to the predictor: logged frames before the start,
  // then what actually happened in closed loop.
  std::vector<scenario::Frame> history;
  for (std::size_t k = 0; k <= start; ++k) history.push_back(log.frames[k]);

  planner::WorldEngine engine{internal.kind, internal.params};
  std::size_t since_prediction = 0;
  std::size_t t = start;
  while (t < last) {
    if (internal.kind == planner::WorldKind::kReactive && internal.repredict && since_prediction >= internal.repredict_every &&
        history.size() >= options.history_frames) {
      DrivingLog recent;
      recent.scenario_id = log.scenario_id;
      recent.city_tag = log.city_tag;
      recent.dt = log.dt;
      recent.ego_id = log.ego_id;
      recent.lane_graph = log.lane_graph;
      recent.frames.assign(history.end() - static_cast<std::ptrdiff_t>(options.history_frames), history.end());
      engine.params = internal.repredict(recent);
      since_prediction = 0;
    }
    planner::PlanningScene scene{&log.lane_graph, &centerline, &paths, out.environment.back(), ego};
    const auto t0 = std::chrono::steady_clock::now();
    const auto plan = planner::plan_step(scene, engine, config);
    out.plan_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());

    const std::size_t steps = std::min<std::size_t>(config.replan_interval, last - t);
    for (std::size_t k = 1; k <= steps; ++k) {
      const auto& p = plan.selected.trajectory[std::min(k, plan.selected.trajectory.size() - 1)];
      if (env) env->step(ego);
      ego.pose = p.pose;
      ego.speed = p.speed;
      ego.progress = progress_on(lane, p.pose.position(), ego.progress);
      ++t;
      out.executed.push_back(p);
      out.environment.push_back(env_agents(t));
      scenario::Frame full{ego};
      full.insert(full.end(), out.environment.back().begin(), out.environment.back().end());
      history.push_back(std::move(full));
    }
    since_prediction += steps;
  }

  world::RolloutTrace trace;
  trace.dt = log.dt;
  trace.frames = out.environment;
  trace.params = world_truth;
  const double expert = centerline.project(log.ego(last).pose.position()).s - p0.s;
  out.score = planner::score_trajectory(out.executed, ego0.length, ego0.width, trace, centerline, log.lane_graph,
                                        config, expert);
  return out;
}

}  // namespace

ClosedLoopResult run_closed_loop(const DrivingLog& log, const InternalWorld& internal, const BehaviorParams& world_truth,
                                 const planner::PlannerConfig& config, const ClosedLoopOptions& options) {
  try {
    return run(log, internal, world_truth, config, options);
  } catch (const std::exception& e) {
    ClosedLoopResult failed;
    failed.score.collision = 0.0;
    failed.score.composite = 0.0;
    failed.error = e.what();
    return failed;
  }
}

}  // namespace adaptive::bench
