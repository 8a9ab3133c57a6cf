#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "adaptive/behavior/behavior.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/core/random.hpp"
#include "adaptive/scenario/generator.hpp"
#include "support.hpp"

namespace adaptive::behavior {
namespace {

constexpr std::size_t kSpeedMean = 0;
constexpr std::size_t kGapMean = 6;
constexpr std::size_t kGapMin = 9;
constexpr std::size_t kHeadwayMean = 12;
constexpr std::size_t kAgentCount = 21;

TEST(ExtractFeatures, StationaryAgentWithoutLead) {
  const auto lane = testing::straight_path(400.0);
  std::vector<scenario::Frame> frames(
      20, {testing::agent_on(*lane, 0, 10.0, 0.0), testing::agent_on(*lane, 1, 60.0, 0.0)});
  const auto f = extract_features(testing::straight_log(400.0, frames));
  EXPECT_EQ(f[kSpeedMean], 0.0);
  EXPECT_EQ(f[kGapMean], kNoLeadGap);
  EXPECT_EQ(f[kGapMin], kNoLeadGap);
  EXPECT_EQ(f[kAgentCount], 1.0);
  for (double x : f) EXPECT_TRUE(std::isfinite(x));
}

TEST(ExtractFeatures, ConstantFollowingGivesExactHeadway) {
  const auto lane = testing::straight_path(1000.0);
  std::vector<scenario::Frame> frames;
  for (int k = 0; k < 20; ++k) {
    const double s = 10.0 + 1.0 * k;
    frames.push_back({testing::agent_on(*lane, 0, s + 12.5, 10.0), testing::agent_on(*lane, 1, s, 10.0)});
  }
  const auto f = extract_features(testing::straight_log(1000.0, frames));
  EXPECT_NEAR(f[kGapMean], 8.0, 1e-9);
  EXPECT_NEAR(f[kHeadwayMean], 0.8, 1e-12);
  EXPECT_EQ(f[kSpeedMean], 10.0);
}

TEST(ExtractFeatures, InvariantUnderTranslation) {
  const auto log = scenario::generate_scenario(scenario::archetype_by_name("BOS"), 5,
                                               {.lane_template = scenario::LaneTemplate::kCurve});
  auto moved = log;
  const Vec2 shift{123.25, -47.5};
  for (auto& seg : moved.lane_graph.segments) {
    for (auto& p : seg.centerline) p = p + shift;
  }
  for (auto& frame : moved.frames) {
    for (auto& a : frame) {
      a.pose.x += shift.x;
      a.pose.y += shift.y;
    }
  }
  const auto a = extract_features(log);
  const auto b = extract_features(moved);
  for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_NEAR(a[i], b[i], 1e-6) << feature_names()[i];
}

TEST(ExtractFeatures, NeedsTwoFrames) {
  auto log = scenario::generate_scenario(scenario::archetype_by_name("BOS"), 5, {});
  log.frames.resize(1);
  EXPECT_THROW(extract_features(log), UsageError);
}

TEST(ExtractFeatures, BosPrefixesHaveLowerMinGapFeatureThanPit) {
  double bos = 0.0, pit = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    bos += extract_features(scenario::generate_scenario(scenario::archetype_by_name("BOS"), seed, {}))[kGapMin];
    pit += extract_features(scenario::generate_scenario(scenario::archetype_by_name("PIT"), seed, {}))[kGapMin];
  }
  EXPECT_LT(bos, pit);
}

SceneFeatures random_features(Rng& rng) {
  SceneFeatures f{};
  for (auto& x : f) x = rng.uniform(0.0, 20.0);
  return f;
}

TEST(BehaviorClassifier, SoftmaxSumsToOne) {
  const BehaviorClassifier model(5, 16, 3);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto p = model.probabilities(random_features(rng));
    ASSERT_EQ(p.size(), 5u);
    for (double x : p) EXPECT_GE(x, 0.0);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-6);
  }
}

TEST(BehaviorClassifier, GradientMatchesFiniteDifferences) {
  BehaviorClassifier model(4, 8, 7);
  Rng rng(2);
  std::vector<Example> batch;
  for (int i = 0; i < 6; ++i) batch.push_back({random_features(rng), static_cast<int>(rng.index(4))});
  for (auto& b : model.parameters()) b += 0.05;  // move biases off zero
  std::vector<double> grad;
  model.loss(batch, &grad);
  auto& params = model.parameters();
  ASSERT_EQ(grad.size(), params.size());
  const std::size_t w1 = 8 * kFeatureCount, b1 = w1 + 8, w2 = b1 + 4 * 8;
  // Five weights from each layer.
  std::vector<std::size_t> picks;
  for (int i = 0; i < 5; ++i) picks.push_back(rng.index(w1));
  for (int i = 0; i < 5; ++i) picks.push_back(b1 + rng.index(w2 - b1));
  const double h = 1e-6;
  for (const auto i : picks) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = model.loss(batch);
    params[i] = saved - h;
    const double down = model.loss(batch);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
    EXPECT_LT(rel, 1e-4) << "parameter " << i << " analytic " << grad[i] << " numeric " << numeric;
  }
}

TEST(BehaviorClassifier, RejectsLabelOutOfRange) {
  const BehaviorClassifier model(3, 4, 1);
  EXPECT_THROW(model.loss({{SceneFeatures{}, 3}}), UsageError);
  EXPECT_THROW(train_classifier({{SceneFeatures{}, -1}}, 3, 1), UsageError);
}

std::vector<Example> two_blobs(std::uint64_t seed, std::size_t per_class) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = static_cast<int>(i % 2);
    Example e;
    for (auto& x : e.features) x = rng.uniform(0.0, 10.0);
    e.features[0] = label == 0 ? rng.uniform(0.0, 1.0) : rng.uniform(20.0, 30.0);
    e.features[5] = label == 0 ? rng.uniform(20.0, 30.0) : rng.uniform(0.0, 1.0);
    e.label = label;
    out.push_back(e);
  }
  return out;
}

TEST(TrainClassifier, SingleClassIsAlwaysPredicted) {
  auto data = two_blobs(1, 50);
  for (auto& e : data) e.label = 0;
  const auto model = train_classifier(data, 1, 4);
  EXPECT_EQ(accuracy(model, data), 1.0);
}

TEST(TrainClassifier, SeparableBlobsInTenEpochs) {
  const auto data = two_blobs(2, 100);
  TrainOptions options;
  options.learning_rate = 1e-2;
  const auto model = train_classifier(data, 2, 5, options);
  EXPECT_EQ(model.epoch_loss.size(), 10u);
  EXPECT_GE(accuracy(model, data), 0.99);
  EXPECT_LE(model.epoch_loss.back(), model.epoch_loss.front());
}

TEST(TrainClassifier, BitIdenticalForSameSeed) {
  const auto data = two_blobs(3, 40);
  const auto a = train_classifier(data, 2, 9);
  const auto b = train_classifier(data, 2, 9);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(a.input_mean, b.input_mean);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  const auto c = train_classifier(data, 2, 10);
  EXPECT_NE(a.parameters(), c.parameters());
}

TEST(PredictBehavior, OneHotLogitsPickCentroid) {
  BehaviorClassifier model(4, 3, 1);
  auto& p = model.parameters();
  std::fill(p.begin(), p.end(), 0.0);
  p[p.size() - 4 + 2] = 10.0;  // output bias of class 2
  calibrate::ClusterModel clusters;
  clusters.k = 4;
  for (int c = 0; c < 4; ++c) clusters.centroids.push_back({10.0, 1.0 + c, 1.0, 1.0, 1.0});
  EXPECT_EQ(predict_behavior(model, SceneFeatures{}, clusters), clusters.centroids[2]);
  clusters.k = 3;
  clusters.centroids.pop_back();
  EXPECT_THROW(predict_behavior(model, SceneFeatures{}, clusters), UsageError);
}

TEST(PredictBehavior, CityModeMapsClassToCity) {
  BehaviorClassifier model(2, 3, 1);
  auto& p = model.parameters();
  std::fill(p.begin(), p.end(), 0.0);
  p[p.size() - 1] = 5.0;
  CityModel cities{{"BOS", "PIT"}, {scenario::archetype_by_name("BOS"), scenario::archetype_by_name("PIT")}};
  EXPECT_EQ(predict_city_behavior(model, SceneFeatures{}, cities), scenario::archetype_by_name("PIT"));
}

TEST(ClassifierIo, ReloadPredictsIdentically) {
  const auto data = two_blobs(4, 30);
  const auto model = train_classifier(data, 2, 3);
  const auto path = std::filesystem::temp_directory_path() / "classifier_roundtrip.json";
  save_classifier(model, path);
  const auto back = load_classifier(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.parameters(), model.parameters());
  EXPECT_EQ(back.input_scale, model.input_scale);
  for (const auto& e : data) EXPECT_EQ(back.logits(e.features), model.logits(e.features));
}

}  // namespace
}  // namespace adaptive::behavior
