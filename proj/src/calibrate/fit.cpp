#include <algorithm>
#include <limits>
#include <unordered_map>

#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/core/parallel.hpp"
#include "adaptive/world/world.hpp"

namespace adaptive::calibrate {

std::size_t ParameterGrid::size() const {
  return min_gap.size() * headway_time.size() * max_acceleration.size() * max_deceleration.size();
}

BehaviorParams ParameterGrid::at(std::size_t index) const {
  BehaviorParams p;
  p.target_velocity = target_velocity;
  p.max_deceleration = max_deceleration[index % max_deceleration.size()];
  index /= max_deceleration.size();
  p.max_acceleration = max_acceleration[index % max_acceleration.size()];
  index /= max_acceleration.size();
  p.headway_time = headway_time[index % headway_time.size()];
  index /= headway_time.size();
  p.min_gap = min_gap.at(index);
  return p;
}

void ParameterGrid::validate() const {
  if (!(target_velocity > 0.0)) throw InvariantError("grid target velocity must be positive");
  for (const auto* list : {&min_gap, &headway_time, &max_acceleration, &max_deceleration}) {
    if (list->empty()) throw InvariantError("grid candidate list is empty");
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (!((*list)[i] > 0.0)) throw InvariantError("grid candidates must be positive");
      if (i > 0 && !((*list)[i] > (*list)[i - 1])) throw InvariantError("grid candidates must be strictly increasing");
    }
  }
}

namespace {

// One log prepared for repeated rollouts: paths, initial agents, the replayed
// ego and the logged positions in world-agent order.
struct FitTarget {
  world::WorldPaths paths;
  scenario::Frame initial;
  std::vector<scenario::AgentState> ego;
  std::vector<std::vector<const scenario::AgentState*>> logged;  // [frame][agent], nullptr if absent
  double dt = 0.1;
};

FitTarget prepare(const DrivingLog& log) {
  FitTarget t;
  t.paths = world::paths_from_log(log);
  t.initial = world::non_ego_agents(log, 0);
  t.ego = world::ego_track(log);
  t.dt = log.dt;
  t.logged.resize(log.horizon());
  for (std::size_t k = 0; k < log.horizon(); ++k) {
    std::unordered_map<int, const scenario::AgentState*> by_id;
    for (const auto& a : log.frames[k]) by_id.emplace(a.id, &a);
    for (const auto& a : t.initial) {
      const auto it = by_id.find(a.id);
      t.logged[k].push_back(it == by_id.end() ? nullptr : it->second);
    }
  }
  return t;
}

double frame_error(const scenario::Frame& sim, const std::vector<const scenario::AgentState*>& logged) {
  double total = 0.0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    if (logged[i] == nullptr) continue;
    const double dx = sim[i].pose.x - logged[i]->pose.x;
    const double dy = sim[i].pose.y - logged[i]->pose.y;
    total += dx * dx + dy * dy;
  }
  return total;
}

// Objective of `params` over all targets; stops once the partial sum exceeds
// `bound` and returns +inf in that case.
double evaluate(const std::vector<FitTarget>& targets, const BehaviorParams& params, double bound) {
  double total = 0.0;
  for (const auto& t : targets) {
    world::ReactiveWorld w(t.paths, t.initial, params, t.dt);
    total += frame_error(w.agents(), t.logged[0]);
    for (std::size_t k = 1; k < t.logged.size(); ++k) {
      w.step(t.ego[k - 1]);
      total += frame_error(w.agents(), t.logged[k]);
      if (total > bound) return std::numeric_limits<double>::infinity();
    }
  }
  return total;
}

}  // namespace

FitResult fit_parameters(const std::vector<DrivingLog>& logs, const ParameterGrid& grid, int jobs) {
  if (logs.empty()) throw UsageError("fit_parameters needs at least one log");
  grid.validate();
  std::vector<FitTarget> targets;
  targets.reserve(logs.size());
  for (const auto& log : logs) targets.push_back(prepare(log));

  // Each worker scans a contiguous block with its own pruning bound; the
  // block winners are reduced in index order.
  const std::size_t n = grid.size();
  const std::size_t blocks = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<FitResult> winners(blocks);
  std::vector<char> found(blocks, 0);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < end; ++i) {
      const BehaviorParams p = grid.at(i);
      const double value = evaluate(targets, p, best);
      if (!found[b] || value < best) {
        best = value;
        winners[b] = {p, value, i};
        found[b] = 1;
      }
    }
  });
  FitResult result = winners[0];
  for (std::size_t b = 1; b < blocks; ++b) {
    if (found[b] && winners[b].objective < result.objective) result = winners[b];
  }
  return result;
}

double fit_objective(const std::vector<DrivingLog>& logs, const BehaviorParams& params) {
  std::vector<FitTarget> targets;
  for (const auto& log : logs) targets.push_back(prepare(log));
  return evaluate(targets, params, std::numeric_limits<double>::infinity());
}

std::vector<LogFit> fit_per_log(const std::vector<DrivingLog>& corpus, const ParameterGrid& grid, int jobs) {
  std::vector<LogFit> out(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const DrivingLog& log = corpus[i];
    try {
      const FitResult r = fit_parameters({log}, grid, 1);
      out[i] = {log.scenario_id, log.city_tag, r.params, r.objective};
    } catch (const std::exception& e) {
      throw InvariantError("fit failed for log " + log.scenario_id + ": " + e.what());
    }
  });
  return out;
}

bool is_informative(const DrivingLog& log, std::size_t min_frames) {
  const auto paths = world::paths_from_log(log);
  std::unordered_map<int, std::size_t> path_of;
  std::unordered_map<int, std::size_t> with_lead;
  std::size_t next = 0;
  for (const auto& a : log.frames.front()) {
    path_of[a.id] = a.id == log.ego_id ? paths.ego_path : paths.agent_paths[next++];
  }
  std::vector<idm::PathNetwork::Candidate> candidates;
  for (const auto& frame : log.frames) {
    candidates.clear();
    for (const auto& a : frame) candidates.push_back({&a, path_of.at(a.id)});
    for (const auto& a : frame) {
      if (a.id == log.ego_id) continue;
      if (paths.network->find_lead(a, path_of.at(a.id), candidates).exists) ++with_lead[a.id];
    }
  }
  return std::any_of(with_lead.begin(), with_lead.end(), [&](const auto& kv) { return kv.second >= min_frames; });
}

}  // namespace adaptive::calibrate
