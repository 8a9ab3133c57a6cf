#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adaptive/planner/planner.hpp"
#include "adaptive/scenario/types.hpp"

namespace adaptive::bench {

using scenario::BehaviorParams;
using scenario::DrivingLog;

// Re-estimates world parameters from a window of recent frames (ego included).
using Predictor = std::function<BehaviorParams(const DrivingLog& recent)>;

struct InternalWorld {
  planner::WorldKind kind = planner::WorldKind::kConstantVelocity;
  BehaviorParams params;         // initial parameters for kReactive
  Predictor repredict;           // optional, kReactive only
  std::size_t repredict_every = 50;  // frames
};

struct ClosedLoopOptions {
  std::size_t start_frame = 19;      // frames 0..start_frame are history
  bool reactive_environment = true;  // false: agents replay the log
  std::size_t history_frames = 20;
};

struct ClosedLoopResult {
  planner::ScoreBreakdown score;
  std::vector<planner::TrajectoryPoint> executed;
  std::vector<scenario::Frame> environment;  // agents per executed frame
  std::vector<double> plan_ms;               // wall clock per plan step
  std::string error;                         // non-empty when the run aborted
};

ClosedLoopResult run_closed_loop(const DrivingLog& log, const InternalWorld& internal, const BehaviorParams& world_truth,
                                 const planner::PlannerConfig& config, const ClosedLoopOptions& options = {});

}  // namespace adaptive::bench
