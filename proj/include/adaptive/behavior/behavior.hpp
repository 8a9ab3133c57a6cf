#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/scenario/types.hpp"

namespace adaptive::behavior {

using scenario::BehaviorParams;
using scenario::DrivingLog;

inline constexpr std::size_t kFeatureCount = 22;
inline constexpr std::size_t kHistoryFrames = 20;
inline constexpr double kContextRadius = 100.0;  // m
inline constexpr double kNoLeadGap = 100.0;      // m
inline constexpr double kHeadwayCap = 10.0;      // s

using SceneFeatures = std::array<double, kFeatureCount>;

// Feature names in vector order.
const std::array<const char*, kFeatureCount>& feature_names();

// Aggregates the first min(20, horizon) frames of `log` (at least 2).
SceneFeatures extract_features(const DrivingLog& log);
// Features of frames [begin, begin + 20) as an independent window.
SceneFeatures extract_window(const DrivingLog& log, std::size_t begin, std::size_t frames = kHistoryFrames);

struct Example {
  SceneFeatures features{};
  int label = 0;
};

struct TrainOptions {
  int epochs = 10;
  double learning_rate = 5e-5;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t hidden = 64;
};

class BehaviorClassifier {
 public:
  BehaviorClassifier() = default;
  BehaviorClassifier(int k, std::size_t hidden, std::uint64_t seed);

  int k() const { return k_; }
  std::size_t hidden() const { return hidden_; }

  std::vector<double> logits(const SceneFeatures& f) const;
  std::vector<double> probabilities(const SceneFeatures& f) const;
  int predict(const SceneFeatures& f) const;  // ties to the lower index

  // Mean cross-entropy and its gradient with respect to every parameter,
  // flattened in parameter order (w1, b1, w2, b2).
  double loss(const std::vector<Example>& batch, std::vector<double>* gradient = nullptr) const;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  std::vector<double> input_mean;   // of log1p(feature)
  std::vector<double> input_scale;
  std::vector<double> epoch_loss;  // full-dataset loss after each epoch
  int epochs = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;

 private:
  void forward(const SceneFeatures& f, std::vector<double>& hidden, std::vector<double>& out) const;

  int k_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

BehaviorClassifier train_classifier(const std::vector<Example>& dataset, int k, std::uint64_t seed,
                                    const TrainOptions& options = {});

double accuracy(const BehaviorClassifier& model, const std::vector<Example>& data);

// Centroid of the most probable cluster.
BehaviorParams predict_behavior(const BehaviorClassifier& model, const SceneFeatures& features,
                                const calibrate::ClusterModel& clusters);

// Label set for the city-level mode: one class per distinct city tag.
struct CityModel {
  std::vector<std::string> cities;
  std::vector<BehaviorParams> params;  // per city, e.g. the per-city fit
};
BehaviorParams predict_city_behavior(const BehaviorClassifier& model, const SceneFeatures& features,
                                     const CityModel& cities);

void save_classifier(const BehaviorClassifier& model, const std::filesystem::path& path);
BehaviorClassifier load_classifier(const std::filesystem::path& path);

}  // namespace adaptive::behavior
