#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adaptive/scenario/types.hpp"

namespace adaptive::calibrate {

using scenario::BehaviorParams;
using scenario::DrivingLog;

struct ParameterGrid {
  double target_velocity = 10.0;
  std::vector<double> min_gap{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> headway_time{0.5, 1.0, 1.5, 2.0};
  std::vector<double> max_acceleration{0.5, 1.0, 1.5, 2.0, 2.5};
  std::vector<double> max_deceleration{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};

  std::size_t size() const;
  // Point `index` in lexicographic order over (min_gap, headway, accel, decel).
  BehaviorParams at(std::size_t index) const;
  void validate() const;
};

struct FitResult {
  BehaviorParams params;
  double objective = 0.0;  // m^2
  std::size_t grid_index = 0;
};

// Grid search over the summed squared position error of reactive rollouts
// (ego replayed from the log). Ties go to the lowest grid index.
FitResult fit_parameters(const std::vector<DrivingLog>& logs, const ParameterGrid& grid, int jobs = 1);

// Objective at one parameter vector, without early termination.
double fit_objective(const std::vector<DrivingLog>& logs, const BehaviorParams& params);

struct LogFit {
  std::string scenario_id;
  std::string city_tag;
  BehaviorParams params;
  double objective = 0.0;
};

std::vector<LogFit> fit_per_log(const std::vector<DrivingLog>& corpus, const ParameterGrid& grid, int jobs = 1);

// A log carries information about the following behaviour when some agent
// has a lead for at least `min_frames` frames.
bool is_informative(const DrivingLog& log, std::size_t min_frames = 50);

struct ClusterModel {
  int k = 0;
  std::vector<double> mean;    // per dimension of BehaviorParams::to_array()
  std::vector<double> stddev;
  std::vector<BehaviorParams> centroids;
  std::vector<int> assignments;          // per training input, input order
  std::vector<double> inertia_history;   // standardized, one per assignment step of the kept run
  int iterations = 0;

  std::vector<double> standardize(const BehaviorParams& p) const;
};

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;
  int restarts = 10;  // independent seedings; the lowest final inertia wins
};

ClusterModel cluster_behaviors(const std::vector<BehaviorParams>& fits, int k, std::uint64_t seed,
                               const KMeansOptions& options = {});
int assign_cluster(const ClusterModel& model, const BehaviorParams& params);

// Fraction of inputs whose cluster's majority label matches their own.
double cluster_purity(const std::vector<int>& assignments, const std::vector<std::string>& labels);
// Smallest per-cluster majority share over non-empty clusters.
double min_cluster_purity(const std::vector<int>& assignments, const std::vector<std::string>& labels);

// Reads a JSON object; absent keys keep the default grid.
ParameterGrid parse_parameter_grid(const std::string& json_text, const std::string& source);

void save_fits(const std::vector<LogFit>& fits, const std::filesystem::path& path);
std::vector<LogFit> load_fits(const std::filesystem::path& path);
void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_cluster_model(const std::filesystem::path& path);

}  // namespace adaptive::calibrate
