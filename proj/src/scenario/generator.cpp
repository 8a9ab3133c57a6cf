#include "adaptive/scenario/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "adaptive/core/error.hpp"
#include "adaptive/core/fixed_text.hpp"
#include "adaptive/core/random.hpp"
#include "adaptive/idm/idm.hpp"
#include "adaptive/world/world.hpp"

namespace adaptive::scenario {

namespace {

AgentState quantized(AgentState a) {
  a.pose = {quantize(a.pose.x), quantize(a.pose.y), quantize(a.pose.heading)};
  a.speed = quantize(a.speed);
  a.length = quantize(a.length);
  a.width = quantize(a.width);
  a.progress = quantize(a.progress);
  return a;
}

BehaviorParams perturbed(const BehaviorParams& base, double noise, Rng& rng) {
  if (noise <= 0.0) return base;
  auto v = base.to_array();
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = quantize(v[i] * std::max(0.2, 1.0 + noise * rng.normal()));
  return BehaviorParams::from_array(v);
}

// Lanes that share a downstream segment form one queue; positions inside a
// queue are measured relative to the first shared segment.
struct Queue {
  std::vector<std::size_t> lanes;
  std::vector<double> offsets;  // per lane
};

std::vector<Queue> build_queues(const std::vector<PathPtr>& lane_paths) {
  std::vector<Queue> queues;
  std::vector<bool> used(lane_paths.size(), false);
  for (std::size_t i = 0; i < lane_paths.size(); ++i) {
    if (used[i]) continue;
    Queue q;
    q.lanes.push_back(i);
    q.offsets.push_back(0.0);
    used[i] = true;
    const int last = lane_paths[i]->spans().back().segment_id;
    for (std::size_t j = i + 1; j < lane_paths.size(); ++j) {
      if (used[j] || lane_paths[j]->spans().back().segment_id != last) continue;
      // First segment of lane i that lane j also reaches.
      for (const auto& span : lane_paths[i]->spans()) {
        if (const auto begin_j = lane_paths[j]->span_begin(span.segment_id)) {
          q.offsets.front() = span.s_begin;
          q.lanes.push_back(j);
          q.offsets.push_back(*begin_j);
          used[j] = true;
          break;
        }
      }
    }
    queues.push_back(std::move(q));
  }
  return queues;
}

struct Placement {
  std::size_t lane = 0;
  double progress = 0.0;
};

bool any_collision(const Frame& frame) { return !colliding_pairs(frame).empty(); }

}  // namespace

std::vector<std::pair<int, int>> colliding_pairs(const Frame& frame, bool include_ego, int ego_id) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!include_ego && frame[i].id == ego_id) continue;
    for (std::size_t j = i + 1; j < frame.size(); ++j) {
      if (!include_ego && frame[j].id == ego_id) continue;
      if (footprints_overlap(footprint_of(frame[i]), footprint_of(frame[j]))) {
        out.emplace_back(std::min(frame[i].id, frame[j].id), std::max(frame[i].id, frame[j].id));
      }
    }
  }
  return out;
}

GeneratedScenario generate_scenario_detailed(const BehaviorParams& archetype, std::uint64_t seed,
                                             const GeneratorConfig& config) {
  archetype.validate();
  if (config.agent_count < 0) throw UsageError("agent count must be non-negative");
  if (config.horizon < 1) throw UsageError("horizon must be at least one frame");
  if (!(config.dt > 0.0)) throw UsageError("dt must be positive");

  Rng rng(seed);
  GeneratedScenario out;
  out.lane_template = config.lane_template;
  if (out.lane_template == LaneTemplate::kMixed) {
    constexpr LaneTemplate kinds[] = {LaneTemplate::kStraight, LaneTemplate::kCurve, LaneTemplate::kMerge};
    out.lane_template = kinds[rng.index(3)];
  }
  const LaneLayout layout = make_lane_layout(out.lane_template, config.layout);
  const LaneGraph& graph = layout.graph;
  out.truth = perturbed(archetype, config.param_noise, rng);
  const BehaviorParams& theta = out.truth;

  std::vector<PathPtr> lane_paths;
  std::vector<std::vector<int>> lane_chains;
  for (const int source : layout.lane_sources) {
    lane_chains.push_back(lane_chain(graph, source));
    lane_paths.push_back(chain_path(graph, lane_chains.back()));
  }
  const auto queues = build_queues(lane_paths);
  std::size_t ego_queue = 0;
  for (std::size_t q = 0; q < queues.size(); ++q) {
    for (const auto lane : queues[q].lanes) {
      if (lane == layout.ego_lane) ego_queue = q;
    }
  }

  BehaviorParams ego_params = theta;
  ego_params.target_velocity = 0.0;
  for (const auto& seg : graph.segments) ego_params.target_velocity = std::max(ego_params.target_velocity, seg.speed_limit);

  const int n = config.agent_count;
  const double dt = quantize(config.dt);
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    // Vehicle 0 is the ego. The first three agents drive ahead of it in its
    // queue; the others pick a queue at random and, in the ego's queue, start
    // behind it.
    std::vector<std::size_t> queue_of(n + 1, ego_queue);
    for (int i = 3; i < n; ++i) queue_of[i + 1] = rng.index(queues.size());
    std::vector<Placement> placement(n + 1);
    std::vector<double> speeds(n + 1);
    for (auto& v : speeds) v = rng.uniform(0.5 * theta.target_velocity, theta.target_velocity);
    bool placed = true;
    for (std::size_t q = 0; q < queues.size(); ++q) {
      const Queue& queue = queues[q];
      std::vector<int> order;  // rear to front
      for (int v = 4; v <= n; ++v) {
        if (queue_of[v] == q) order.push_back(v);
      }
      if (q == ego_queue) {
        order.push_back(0);
        for (int v = 1; v <= std::min(3, n); ++v) order.push_back(v);
      }
      double cursor = 0.0;  // virtual centre of the previous vehicle
      for (std::size_t k = 0; k < order.size(); ++k) {
        const int v = order[k];
        const std::size_t slot = v == 0 ? std::size_t(std::find(queue.lanes.begin(), queue.lanes.end(), layout.ego_lane) -
                                                      queue.lanes.begin())
                                        : rng.index(queue.lanes.size());
        const std::size_t lane = queue.lanes[slot];
        const double offset = queue.offsets[slot];
        const double virtual_s = k == 0 ? rng.uniform(5.0, 30.0) - offset
                                        : cursor + config.vehicle_length + rng.uniform(theta.min_gap + 2.0, 30.0);
        cursor = virtual_s;
        placement[v] = {lane, virtual_s + offset};
        if (placement[v].progress < 0.0 || placement[v].progress > lane_paths[lane]->length() - 20.0) placed = false;
      }
    }
    if (!placed) continue;

    DrivingLog log;
    log.scenario_id = config.city_tag + "_" + std::to_string(seed);
    log.city_tag = config.city_tag;
    log.dt = dt;
    log.ego_id = 0;
    log.lane_graph = graph;
    log.lane_graph.goal_segment = lane_chains[layout.ego_lane].back();
    Frame first;
    for (int v = 0; v <= n; ++v) {
      AgentState a;
      a.id = v;
      a.length = config.vehicle_length;
      a.width = config.vehicle_width;
      a.speed = speeds[v];
      a.progress = quantize(placement[v].progress);
      a.pose = lane_paths[placement[v].lane]->pose_at(a.progress);
      first.push_back(quantized(a));
    }
    log.frames.push_back(first);

    // The paths a consumer of the log would reconstruct must be the lanes we placed on.
    const world::WorldPaths paths = world::paths_from_log(log);
    const auto assigned = assign_paths(graph, first);
    bool consistent = true;
    for (int v = 0; v <= n; ++v) {
      if (assigned.chains[assigned.index[v]] != lane_chains[placement[v].lane]) consistent = false;
    }
    if (!consistent) continue;
    const auto& network = *paths.network;
    auto path_of = [&](int v) { return v == 0 ? paths.ego_path : paths.agent_paths[v - 1]; };

    // Every follower must be able to stop behind its lead with emergency braking.
    std::vector<idm::PathNetwork::Candidate> candidates;
    for (int v = 0; v <= n; ++v) candidates.push_back({&first[v], path_of(v)});
    bool feasible = true;
    for (int v = 0; v <= n && feasible; ++v) {
      const auto lead = network.find_lead(first[v], path_of(v), candidates);
      if (!lead.exists) continue;
      const double vf = first[v].speed;
      const double vl = vf - lead.approach_rate;
      const double need = theta.min_gap + std::max(0.0, vf * vf - vl * vl) / (4.0 * theta.max_deceleration) + vf * dt;
      if (lead.gap < need) feasible = false;
    }
    if (!feasible) continue;

    // Pass 1: everyone, ego included, drives IDM; this yields the ego track.
    std::vector<AgentState> ego_track{first[0]};
    {
      Frame state = first;
      Frame next(state.size());
      for (std::size_t t = 0; t + 1 < config.horizon && feasible; ++t) {
        candidates.clear();
        for (int v = 0; v <= n; ++v) candidates.push_back({&state[v], path_of(v)});
        for (int v = 0; v <= n; ++v) {
          const Path& path = network.path(path_of(v));
          const auto lead = network.find_lead(state[v], path_of(v), candidates);
          const auto& p = v == 0 ? ego_params : theta;
          const double accel = idm::idm_acceleration(state[v].speed, lead, p, path.speed_limit_at(state[v].progress));
          next[v] = idm::step_agent(state[v], accel, dt, path);
        }
        state.swap(next);
        if (any_collision(state)) feasible = false;
        ego_track.push_back(quantized(state[0]));
      }
    }
    if (!feasible) continue;

    // Pass 2: agents replayed reactively against the recorded ego, exactly as a
    // calibration rollout will see them.
    const Frame initial(first.begin() + 1, first.end());
    const auto trace = world::rollout_reactive(initial, paths, ego_track, theta, config.horizon, dt);
    log.frames.clear();
    for (std::size_t k = 0; k < config.horizon && feasible; ++k) {
      Frame frame{ego_track[k]};
      for (const auto& a : trace.frames[k]) frame.push_back(quantized(a));
      if (any_collision(frame)) feasible = false;
      log.frames.push_back(std::move(frame));
    }
    if (!feasible) continue;
    log.validate();
    out.log = std::move(log);
    out.attempts = attempt;
    return out;
  }
  throw InvariantError("infeasible placement: no collision-free start found after " +
                       std::to_string(config.max_attempts) + " attempts");
}

DrivingLog generate_scenario(const BehaviorParams& archetype, std::uint64_t seed, const GeneratorConfig& config) {
  return generate_scenario_detailed(archetype, seed, config).log;
}

long GapHistogram::total() const {
  long sum = 0;
  for (const long c : counts) sum += c;
  return sum;
}

double GapHistogram::mean() const {
  if (gaps.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const double g : gaps) sum += g;
  return sum / static_cast<double>(gaps.size());
}

void GapHistogram::merge(const GapHistogram& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  gaps.insert(gaps.end(), other.gaps.begin(), other.gaps.end());
}

GapHistogram min_gap_stats(const DrivingLog& log) {
  GapHistogram hist;
  const auto paths = world::paths_from_log(log);
  std::unordered_map<int, std::size_t> path_of;
  std::size_t next = 0;
  for (const auto& a : log.frames.front()) {
    path_of[a.id] = a.id == log.ego_id ? paths.ego_path : paths.agent_paths[next++];
  }
  std::vector<idm::PathNetwork::Candidate> candidates;
  for (std::size_t k = 0; k < log.horizon(); ++k) {
    candidates.clear();
    for (const auto& a : log.frames[k]) {
      if (a.id != log.ego_id) candidates.push_back({&a, path_of.at(a.id)});
    }
    const AgentState& ego = log.ego(k);
    const auto lead = paths.network->find_lead(ego, paths.ego_path, candidates);
    if (!lead.exists) continue;
    const double gap = lead.gap;
    if (gap < 0.0 || gap >= hist.upper) continue;
    hist.counts[static_cast<std::size_t>(gap / hist.bucket_width)] += 1;
    hist.gaps.push_back(gap);
  }
  return hist;
}

}  // namespace adaptive::scenario
