#include "adaptive/planner/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "adaptive/core/error.hpp"
#include "adaptive/idm/idm.hpp"

namespace adaptive::planner {

void PlannerConfig::validate() const {
  if (speed_fractions.empty() || lateral_offsets.empty()) throw UsageError("proposal grid is empty");
  for (const double f : speed_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("speed fractions must lie in (0, 1]");
  }
  if (weights.progress < 0 || weights.speed < 0 || weights.ttc < 0 || weights.comfort < 0 ||
      !(weights.progress + weights.speed + weights.ttc + weights.comfort > 0.0)) {
    throw UsageError("score weights must be non-negative with a positive sum");
  }
  if (replan_interval < 1) throw UsageError("replan interval must be at least one frame");
  if (horizon < 2) throw UsageError("planning horizon must be at least two frames");
  if (!(dt > 0.0)) throw UsageError("dt must be positive");
  if (!(ttc_step > 0.0) || !(ttc_bound >= 0.0)) throw UsageError("invalid TTC settings");
  if (!(resample_spacing > 0.0)) throw UsageError("resample spacing must be positive");
  ego_params.validate();
}

Path centerline_search(const LaneGraph& graph, const Pose2& start, int goal_segment, double spacing) {
  if (!graph.contains(goal_segment)) throw InvariantError("goal segment does not exist");
  const int start_segment = scenario::locate_segment(graph, start.position());
  const auto& first = graph.segment(start_segment);
  const Path first_path(first.centerline, std::vector<double>(first.centerline.size() - 1, first.speed_limit));
  const auto proj = first_path.project(start.position());
  const double remaining = first_path.length() - proj.s;

  // Dijkstra over segments; a segment's cost is its full length.
  std::unordered_map<int, double> dist{{start_segment, remaining}};
  std::unordered_map<int, int> parent;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  open.push({remaining, start_segment});
  while (!open.empty()) {
    const auto [d, id] = open.top();
    open.pop();
    if (d > dist.at(id)) continue;
    if (id == goal_segment) break;
    for (const int next : graph.segment(id).successors) {
      const double nd = d + graph.segment(next).length();
      const auto it = dist.find(next);
      if (it == dist.end() || nd < it->second ||
          (nd == it->second && parent.contains(next) && id < parent.at(next))) {
        dist[next] = nd;
        parent[next] = id;
        open.push({nd, next});
      }
    }
  }
  if (!dist.contains(goal_segment)) throw InvariantError("goal segment unreachable from start");

  std::vector<int> route{goal_segment};
  while (route.back() != start_segment) route.push_back(parent.at(route.back()));
  std::reverse(route.begin(), route.end());

  std::vector<Vec2> points;
  std::vector<double> limits;
  std::vector<SegmentSpan> spans;
  double s = 0.0;
  auto add = [&](const Vec2& p, double limit) {
    if (!points.empty()) {
      const double step = (p - points.back()).norm();
      if (step < 1e-9) return;
      s += step;
      limits.push_back(limit);
    }
    points.push_back(p);
  };
  for (std::size_t r = 0; r < route.size(); ++r) {
    const auto& seg = graph.segment(route[r]);
    const double begin = s;
    if (r == 0) {
      const Pose2 p0 = first_path.pose_at(proj.s);
      add(p0.position(), seg.speed_limit);
      for (std::size_t i = proj.segment + 1; i < seg.centerline.size(); ++i) add(seg.centerline[i], seg.speed_limit);
    } else {
      for (const auto& p : seg.centerline) add(p, seg.speed_limit);
    }
    spans.push_back({seg.id, begin, s});
  }
  if (points.size() < 2) throw InvariantError("start pose is at the end of the route");
  return Path::resampled(Path(std::move(points), std::move(limits), std::move(spans)), spacing);
}

namespace {

struct AgentOnPath {
  double s = 0.0;
  double lateral = 0.0;
  double speed_along = 0.0;
  double length = 0.0;
};

// Projection of every world agent at every frame onto the centerline near the ego.
std::vector<std::vector<AgentOnPath>> project_world(const Path& centerline, const world::RolloutTrace& world,
                                                    double s0) {
  const std::size_t lo = centerline.segment_at(s0 - 10.0);
  const std::size_t hi = centerline.segment_at(s0 + 170.0);
  std::vector<std::vector<AgentOnPath>> out(world.frames.size());
  for (std::size_t t = 0; t < world.frames.size(); ++t) {
    for (const auto& a : world.frames[t]) {
      const auto p = centerline.project(a.pose.position(), lo, hi);
      const double heading = centerline.heading_of_segment(p.segment);
      out[t].push_back({p.s, p.lateral, a.speed * std::cos(a.pose.heading - heading), a.length});
    }
  }
  return out;
}

}  // namespace

std::vector<Proposal> generate_proposals(const Path& centerline, const EgoState& ego, const PlannerConfig& config,
                                         const world::RolloutTrace* world, double lane_width) {
  const auto start = centerline.project(ego.pose.position());
  const std::size_t horizon = config.horizon;
  std::vector<std::vector<AgentOnPath>> agents;
  const bool follow = config.lead_aware && world != nullptr;
  if (follow) {
    if (world->horizon() != horizon) throw UsageError("world trace horizon differs from the planning horizon");
    agents = project_world(centerline, *world, start.s);
  }
  const double ramp_frames = std::max(1.0, config.lateral_transition / config.dt);

  std::vector<Proposal> out;
  for (const double f : config.speed_fractions) {
    for (const double offset : config.lateral_offsets) {
      Proposal p;
      p.speed_fraction = f;
      p.lateral_offset = offset;
      p.trajectory.reserve(horizon);
      p.trajectory.push_back({ego.pose, ego.speed, start.s, start.lateral});
      double v = ego.speed;
      double s = start.s;
      for (std::size_t t = 1; t < horizon; ++t) {
        const double lateral_prev = p.trajectory.back().lateral;
        BehaviorParams params = config.ego_params;
        params.target_velocity = f * std::min(config.ego_params.target_velocity, centerline.speed_limit_at(s));
        idm::LeadObservation lead;
        if (follow) {
          double best = std::numeric_limits<double>::infinity();
          for (const auto& a : agents[t - 1]) {
            if (std::abs(a.lateral - lateral_prev) > 0.5 * lane_width) continue;
            const double sep = a.s - s;
            if (sep <= 0.0 || sep > idm::kLeadRange || sep >= best) continue;
            best = sep;
            lead.exists = true;
            lead.gap = std::max(idm::kMinimumGap, sep - 0.5 * (ego.length + a.length));
            lead.approach_rate = v - a.speed_along;
          }
        }
        const double accel = idm::idm_acceleration(v, lead, params);
        v = std::max(0.0, v + accel * config.dt);
        s += v * config.dt;
        if (s >= centerline.length()) {
          s = centerline.length();
          v = 0.0;
        }
        const double blend = std::min(1.0, static_cast<double>(t) / ramp_frames);
        const double lateral = start.lateral + (offset - start.lateral) * blend;
        p.trajectory.push_back({centerline.pose_at(s, lateral), v, s, lateral});
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

double distance_to_lanes(const LaneGraph& graph, const Vec2& point) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seg : graph.segments) {
    for (std::size_t i = 0; i + 1 < seg.centerline.size(); ++i) {
      const Vec2 a = seg.centerline[i];
      const Vec2 d = seg.centerline[i + 1] - a;
      const double t = std::clamp((point - a).dot(d) / d.squared_norm(), 0.0, 1.0);
      best = std::min(best, (point - (a + d * t)).norm());
    }
  }
  return best;
}

double composite_score(const ScoreBreakdown& s, const ScoreWeights& w) {
  const double total = w.progress + w.speed + w.ttc + w.comfort;
  const double weighted =
      (w.progress * s.progress_ratio + w.speed * s.speed_compliance + w.ttc * s.ttc_bounded + w.comfort * s.comfort) /
      total;
  return 100.0 * s.collision * s.drivable_area * weighted;
}

namespace {

constexpr double kStoppedSpeed = 0.05;

// The ego is at fault for contacts with agents whose centre is ahead of it.
bool ahead_of(const Pose2& ego, const Vec2& other) {
  const Vec2 d = other - ego.position();
  return d.x * std::cos(ego.heading) + d.y * std::sin(ego.heading) > 0.0;
}

Pose2 advance(const Pose2& p, double speed, double tau) {
  return {p.x + std::cos(p.heading) * speed * tau, p.y + std::sin(p.heading) * speed * tau, p.heading};
}

}  // namespace

ScoreBreakdown score_trajectory(const std::vector<TrajectoryPoint>& ego, double ego_length, double ego_width,
                                const world::RolloutTrace& world, const Path& centerline, const LaneGraph& graph,
                                const PlannerConfig& config, double progress_normalizer) {
  if (ego.size() != world.horizon()) throw UsageError("score: trajectory and world horizons differ");
  if (std::abs(world.dt - config.dt) > 1e-9) throw UsageError("score: dt mismatch");
  ScoreBreakdown s;
  const std::size_t h = ego.size();
  if (h == 0) return s;
  const double drivable_limit = 0.5 * graph.lane_width + config.drivable_margin;
  std::size_t speed_ok = 0, ttc_ok = 0, comfort_ok = 0;

  std::vector<double> accel(h, 0.0), jerk(h, 0.0);
  for (std::size_t t = 0; t + 1 < h; ++t) accel[t] = (ego[t + 1].speed - ego[t].speed) / config.dt;
  if (h >= 2) accel[h - 1] = accel[h - 2];
  for (std::size_t t = 0; t + 2 < h; ++t) jerk[t] = (accel[t + 1] - accel[t]) / config.dt;
  if (h >= 3) jerk[h - 2] = jerk[h - 1] = jerk[h - 3];

  for (std::size_t t = 0; t < h; ++t) {
    const auto& e = ego[t];
    const Footprint ef{e.pose, ego_length, ego_width};
    const bool moving = e.speed >= kStoppedSpeed;
    for (const auto& a : world.frames[t]) {
      if (moving && ahead_of(e.pose, a.pose.position()) && footprints_overlap(ef, scenario::footprint_of(a))) {
        s.collision = 0.0;
      }
    }
    if (distance_to_lanes(graph, e.pose.position()) > drivable_limit) s.drivable_area = 0.0;
    if (e.speed <= centerline.speed_limit_at(e.progress) + 1e-9) ++speed_ok;

    bool ttc_pass = true;
    if (moving) {
      for (const auto& a : world.frames[t]) {
        const double reach = (e.speed + a.speed) * config.ttc_bound + ego_length + a.length;
        if ((a.pose.position() - e.pose.position()).squared_norm() > reach * reach) continue;
        for (double tau = config.ttc_step; tau <= config.ttc_bound + 1e-9 && ttc_pass; tau += config.ttc_step) {
          const Pose2 ep = advance(e.pose, e.speed, tau);
          const Pose2 ap = advance(a.pose, a.speed, tau);
          if (ahead_of(ep, ap.position()) && footprints_overlap({ep, ego_length, ego_width}, {ap, a.length, a.width})) {
            ttc_pass = false;
          }
        }
        if (!ttc_pass) break;
      }
    }
    if (ttc_pass) ++ttc_ok;
    if (std::abs(accel[t]) <= config.ego_params.max_acceleration + 1e-9 && std::abs(jerk[t]) <= config.jerk_bound + 1e-9) {
      ++comfort_ok;
    }
  }
  const double hd = static_cast<double>(h);
  s.speed_compliance = speed_ok / hd;
  s.ttc_bounded = ttc_ok / hd;
  s.comfort = comfort_ok / hd;
  const double progress = ego.back().progress - ego.front().progress;
  s.progress_ratio = progress_normalizer > 1e-9 ? std::clamp(progress / progress_normalizer, 0.0, 1.0) : 0.0;
  s.composite = composite_score(s, config.weights);
  return s;
}

ScoreBreakdown score_proposal(const Proposal& p, const world::RolloutTrace& world, const Path& centerline,
                              const LaneGraph& graph, const PlannerConfig& config, double progress_normalizer,
                              double ego_length, double ego_width) {
  return score_trajectory(p.trajectory, ego_length, ego_width, world, centerline, graph, config, progress_normalizer);
}

std::size_t select_best(const std::vector<Proposal>& proposals, const std::vector<ScoreBreakdown>& scores) {
  if (proposals.empty() || proposals.size() != scores.size()) throw UsageError("select_best: bad proposal set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < proposals.size(); ++i) {
    const auto& a = scores[i];
    const auto& b = scores[best];
    const auto key_a = std::make_tuple(-a.composite, -a.progress_ratio, std::abs(proposals[i].lateral_offset),
                                       proposals[i].speed_fraction);
    const auto key_b = std::make_tuple(-b.composite, -b.progress_ratio, std::abs(proposals[best].lateral_offset),
                                       proposals[best].speed_fraction);
    if (key_a < key_b) best = i;
  }
  return best;
}

PlanResult plan_step(const PlanningScene& scene, const WorldEngine& engine, const PlannerConfig& config) {
  if (scene.graph == nullptr || scene.centerline == nullptr || scene.paths == nullptr) {
    throw UsageError("plan_step: incomplete scene");
  }
  const std::size_t h = config.horizon;
  PlanResult result;
  if (engine.kind == WorldKind::kConstantVelocity) {
    result.world = world::rollout_constant_velocity(scene.agents, *scene.paths, h, config.dt);
  } else {
    // World agents react to the ego holding its current speed along its lane.
    const Path& lane = scene.paths->ego_path_ref();
    std::vector<AgentState> ego_plan;
    ego_plan.reserve(h);
    for (std::size_t t = 0; t < h; ++t) {
      AgentState e = scene.ego;
      e.progress = std::min(lane.length(), scene.ego.progress + scene.ego.speed * config.dt * static_cast<double>(t));
      if (t > 0) e.pose = lane.pose_at(e.progress);
      ego_plan.push_back(e);
    }
    result.world = world::rollout_reactive(scene.agents, *scene.paths, ego_plan, engine.params, h, config.dt);
  }
  const EgoState ego{scene.ego.pose, scene.ego.speed, scene.ego.length, scene.ego.width};
  auto proposals = generate_proposals(*scene.centerline, ego, config, &result.world, scene.graph->lane_width);
  double normalizer = 0.0;
  for (const auto& p : proposals) {
    normalizer = std::max(normalizer, p.trajectory.back().progress - p.trajectory.front().progress);
  }
  result.scores.reserve(proposals.size());
  for (const auto& p : proposals) {
    result.scores.push_back(score_proposal(p, result.world, *scene.centerline, *scene.graph, config, normalizer,
                                           scene.ego.length, scene.ego.width));
  }
  result.index = select_best(proposals, result.scores);
  result.score = result.scores[result.index];
  result.selected = std::move(proposals[result.index]);
  return result;
}

}  // namespace adaptive::planner
