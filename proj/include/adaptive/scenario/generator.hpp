#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adaptive/scenario/types.hpp"

namespace adaptive::scenario {

enum class LaneTemplate { kStraight, kCurve, kMerge, kMixed };

std::string to_string(LaneTemplate t);
LaneTemplate lane_template_from_string(const std::string& name);

struct TemplateSettings {
  double lane_width = 3.5;
  double speed_limit = 12.0;
  double length = 400.0;       // straight / merge total length
  double curve_radius = 40.0;  // centre lane
};

// Lane graph plus the source segment of every lane (rightmost first) and the
// lane the ego starts in.
struct LaneLayout {
  LaneGraph graph;
  std::vector<int> lane_sources;
  std::size_t ego_lane = 0;
};

LaneLayout make_lane_layout(LaneTemplate kind, const TemplateSettings& settings);

struct GeneratorConfig {
  int agent_count = 8;  // non-ego agents
  LaneTemplate lane_template = LaneTemplate::kStraight;
  std::size_t horizon = 150;
  double dt = 0.1;
  TemplateSettings layout;
  double vehicle_length = 4.5;
  double vehicle_width = 2.0;
  // Relative standard deviation of per-log noise on min_gap..max_deceleration.
  double param_noise = 0.0;
  std::string city_tag = "SYN";
  int max_attempts = 100;
};

struct GeneratedScenario {
  DrivingLog log;
  BehaviorParams truth;  // parameters the agents were rolled out with
  LaneTemplate lane_template = LaneTemplate::kStraight;
  int attempts = 0;
};

GeneratedScenario generate_scenario_detailed(const BehaviorParams& archetype, std::uint64_t seed,
                                             const GeneratorConfig& config);
DrivingLog generate_scenario(const BehaviorParams& archetype, std::uint64_t seed,
                             const GeneratorConfig& config);

// Pairs of agent ids whose footprints overlap.
std::vector<std::pair<int, int>> colliding_pairs(const Frame& frame, bool include_ego = true, int ego_id = -1);

struct GapHistogram {
  double bucket_width = 1.0;
  double upper = 50.0;
  std::vector<long> counts = std::vector<long>(50, 0);
  std::vector<double> gaps;  // in-range samples in frame order

  long total() const;
  double mean() const;  // NaN when empty
  void merge(const GapHistogram& other);
};

// Bumper-to-bumper gap between the ego and its lead (within 100 m) per frame.
GapHistogram min_gap_stats(const DrivingLog& log);

}  // namespace adaptive::scenario
