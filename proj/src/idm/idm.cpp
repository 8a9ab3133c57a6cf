#include "adaptive/idm/idm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adaptive/core/error.hpp"

namespace adaptive::idm {

double idm_acceleration(double v, const LeadObservation& lead, const BehaviorParams& params,
                        double speed_limit) {
  const double desired = std::min(params.target_velocity, speed_limit);
  const double ratio = v / desired;
  double a = 1.0 - (ratio * ratio) * (ratio * ratio);
  if (lead.exists) {
    const double braking = 2.0 * std::sqrt(params.max_acceleration * params.max_deceleration);
    const double s_star =
        params.min_gap + std::max(0.0, v * params.headway_time + v * lead.approach_rate / braking);
    const double q = s_star / lead.gap;
    a -= q * q;
  }
  a *= params.max_acceleration;
  return std::clamp(a, -2.0 * params.max_deceleration, params.max_acceleration);
}

AgentState step_agent(const AgentState& state, double accel, double dt, const Path& path) {
  AgentState next = state;
  next.speed = std::max(0.0, state.speed + accel * dt);
  next.progress = state.progress + next.speed * dt;
  if (next.progress >= path.length()) {
    next.progress = path.length();
    next.speed = 0.0;
  }
  next.pose = path.pose_at(next.progress);
  return next;
}

namespace {

// First lane segment of `a` that `b` also contains, when the two chains
// coincide from there on (merge or identical lane).
std::optional<int> shared_suffix_start(const Path& a, const Path& b) {
  const auto sa = a.spans();
  const auto sb = b.spans();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    for (std::size_t j = 0; j < sb.size(); ++j) {
      if (sa[i].segment_id != sb[j].segment_id) continue;
      if (sa.size() - i != sb.size() - j) return std::nullopt;
      for (std::size_t k = 0; i + k < sa.size(); ++k) {
        if (sa[i + k].segment_id != sb[j + k].segment_id) return std::nullopt;
      }
      return sa[i].segment_id;
    }
  }
  return std::nullopt;
}

bool paths_come_close(const Path& query, const Path& other, double threshold) {
  const Path dense = Path::resampled(other, 1.0);
  for (const Vec2& p : dense.points()) {
    if (std::abs(query.project(p).lateral) <= threshold + 1.0) return true;
  }
  return false;
}

}  // namespace

PathNetwork::PathNetwork(std::vector<PathPtr> paths, double lane_width, double range)
    : paths_(std::move(paths)), lane_width_(lane_width), range_(range) {
  const std::size_t n = paths_.size();
  links_.resize(n * n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t c = 0; c < n; ++c) {
      Link& l = links_[q * n + c];
      if (q == c || paths_[q] == paths_[c]) {
        l.relation = Relation::kSame;
        continue;
      }
      const auto common = shared_suffix_start(*paths_[q], *paths_[c]);
      if (common) {
        l.relation = Relation::kShared;
        l.query_offset = *paths_[q]->span_begin(*common);
        l.candidate_offset = *paths_[c]->span_begin(*common);
      } else if (paths_come_close(*paths_[q], *paths_[c], 0.5 * lane_width_)) {
        l.relation = Relation::kGeometric;
      }
    }
  }
}

std::optional<double> PathNetwork::lead_separation(const AgentState& query, std::size_t query_path,
                                                   const AgentState& candidate,
                                                   std::size_t candidate_path) const {
  const Link& l = link(query_path, candidate_path);
  double separation = 0.0;
  switch (l.relation) {
    case Relation::kNone:
      return std::nullopt;
    case Relation::kSame:
      separation = candidate.progress - query.progress;
      break;
    case Relation::kShared:
      // Distance to the merge point decides the order on both approaches.
      separation = (candidate.progress - l.candidate_offset) - (query.progress - l.query_offset);
      break;
    case Relation::kGeometric: {
      const Vec2 d = candidate.pose.position() - query.pose.position();
      if (d.squared_norm() > (range_ + 10.0) * (range_ + 10.0)) return std::nullopt;
      const Path& p = *paths_[query_path];
      const auto proj = p.project(candidate.pose.position(), p.segment_at(query.progress - 10.0),
                                  p.segment_at(query.progress + range_ + 10.0));
      if (std::abs(proj.lateral) > 0.5 * lane_width_) return std::nullopt;
      separation = proj.s - query.progress;
      break;
    }
  }
  if (separation > range_) return std::nullopt;
  if (separation < 0.0 || (separation == 0.0 && candidate.id > query.id)) return std::nullopt;
  return separation;
}

LeadObservation PathNetwork::find_lead(const AgentState& query, std::size_t query_path,
                                       std::span<const Candidate> candidates) const {
  LeadObservation best;
  double best_separation = 0.0;
  for (const auto& c : candidates) {
    if (c.state->id == query.id) continue;
    const auto separation = lead_separation(query, query_path, *c.state, c.path);
    if (!separation) continue;
    if (best.exists && (*separation > best_separation ||
                        (*separation == best_separation && c.state->id > best.lead_id))) {
      continue;
    }
    best.exists = true;
    best.lead_id = c.state->id;
    best_separation = *separation;
    best.gap = std::max(kMinimumGap, *separation - 0.5 * (query.length + c.state->length));
    double lead_speed = c.state->speed;
    if (link(query_path, c.path).relation == Relation::kGeometric) {
      lead_speed *= std::cos(c.state->pose.heading - query.pose.heading);
    }
    best.approach_rate = query.speed - lead_speed;
  }
  return best;
}

LeadObservation find_lead(const AgentState& agent, std::span<const AgentState> others,
                          std::span<const PathPtr> paths, double lane_width) {
  if (paths.size() != others.size() + 1) throw UsageError("find_lead needs one path per agent");
  std::vector<PathPtr> unique;
  std::map<const Path*, std::size_t> index;
  std::vector<std::size_t> per_agent;
  for (const auto& p : paths) {
    auto [it, inserted] = index.try_emplace(p.get(), unique.size());
    if (inserted) unique.push_back(p);
    per_agent.push_back(it->second);
  }
  const PathNetwork network(unique, lane_width);
  std::vector<PathNetwork::Candidate> candidates;
  for (std::size_t i = 0; i < others.size(); ++i) candidates.push_back({&others[i], per_agent[i + 1]});
  return network.find_lead(agent, per_agent[0], candidates);
}

}  // namespace adaptive::idm
