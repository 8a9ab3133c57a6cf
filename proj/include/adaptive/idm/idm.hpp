#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "adaptive/core/geometry.hpp"
#include "adaptive/scenario/types.hpp"

namespace adaptive::idm {

using scenario::AgentState;
using scenario::BehaviorParams;
using scenario::PathPtr;

inline constexpr double kAccelerationExponent = 4.0;
inline constexpr double kLeadRange = 100.0;      // m
inline constexpr double kMinimumGap = 1e-3;      // m, floor for overlapping vehicles

struct LeadObservation {
  double gap = 0.0;            // bumper to bumper, m
  double approach_rate = 0.0;  // follower speed minus lead speed, m/s
  bool exists = false;
  int lead_id = -1;
};

// Standard IDM law with desired speed min(target_velocity, speed_limit),
// clamped to [-2 * max_deceleration, max_acceleration].
double idm_acceleration(double v, const LeadObservation& lead, const BehaviorParams& params,
                        double speed_limit = std::numeric_limits<double>::infinity());

// Semi-implicit Euler along `path`. An agent that reaches the path end stops there.
AgentState step_agent(const AgentState& state, double accel, double dt, const Path& path);

// Precomputed relations between the spatial paths of a scene so that lead
// search is cheap enough to run inside a 960-point grid search.
class PathNetwork {
 public:
  PathNetwork(std::vector<PathPtr> paths, double lane_width, double range = kLeadRange);

  std::size_t size() const { return paths_.size(); }
  const Path& path(std::size_t i) const { return *paths_[i]; }
  const PathPtr& path_ptr(std::size_t i) const { return paths_[i]; }
  double lane_width() const { return lane_width_; }

  // Signed separation (m, centre to centre along the querying path) when
  // `candidate` counts as a lead of `query`; nullopt otherwise.
  std::optional<double> lead_separation(const AgentState& query, std::size_t query_path,
                                        const AgentState& candidate, std::size_t candidate_path) const;

  struct Candidate {
    const AgentState* state;
    std::size_t path;
  };
  LeadObservation find_lead(const AgentState& query, std::size_t query_path,
                            std::span<const Candidate> candidates) const;

 private:
  enum class Relation { kSame, kShared, kGeometric, kNone };
  struct Link {
    Relation relation = Relation::kNone;
    double query_offset = 0.0;      // kShared: arc length of the first common segment
    double candidate_offset = 0.0;
  };
  const Link& link(std::size_t q, std::size_t c) const { return links_[q * paths_.size() + c]; }

  std::vector<PathPtr> paths_;
  double lane_width_;
  double range_;
  std::vector<Link> links_;
};

// Convenience form: `paths[0]` belongs to `agent`, `paths[i + 1]` to `others[i]`.
LeadObservation find_lead(const AgentState& agent, std::span<const AgentState> others,
                          std::span<const PathPtr> paths, double lane_width);

}  // namespace adaptive::idm
