#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "adaptive/bench/closed_loop.hpp"
#include "adaptive/core/error.hpp"
#include "adaptive/planner/planner.hpp"
#include "adaptive/scenario/generator.hpp"
#include "support.hpp"

namespace adaptive::planner {
namespace {

using testing::straight_graph;

scenario::LaneSegment segment(int id, std::vector<Vec2> line, std::vector<int> successors) {
  scenario::LaneSegment s;
  s.id = id;
  s.centerline = std::move(line);
  s.successors = std::move(successors);
  return s;
}

LaneGraph chain_graph() {
  LaneGraph g;
  g.segments = {segment(0, {{0, 0}, {100, 0}}, {1}), segment(1, {{100, 0}, {150, 0}}, {2}),
                segment(2, {{150, 0}, {270, 0}}, {})};
  g.goal_segment = 2;
  return g;
}

// 0 forks into an 80 m branch (1) and a 100 m branch (2) that both reach 3.
LaneGraph fork_graph() {
  LaneGraph g;
  g.segments = {segment(0, {{0, 0}, {100, 0}}, {1, 2}), segment(1, {{100, 0}, {180, 0}}, {3}),
                segment(2, {{100, 0}, {140, 30}, {180, 0}}, {3}), segment(3, {{180, 0}, {280, 0}}, {})};
  g.goal_segment = 3;
  return g;
}

// Every simple successor path from `from` to `goal`, summed segment lengths.
double shortest_by_enumeration(const LaneGraph& g, int from, int goal) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, double)> walk = [&](int id, double total) {
    total += g.segment(id).length();
    if (id == goal) {
      best = std::min(best, total);
      return;
    }
    for (int next : g.segment(id).successors) walk(next, total);
  };
  walk(from, 0.0);
  return best;
}

TEST(CenterlineSearch, StartOnGoalSegment) {
  const auto g = straight_graph(100.0);
  const Path p = centerline_search(g, {30.0, 0.4, 0.0}, 0);
  EXPECT_NEAR(p.length(), 70.0, 1e-9);
  EXPECT_NEAR(p.pose_at(0.0).x, 30.0, 1e-9);
  EXPECT_NEAR(p.pose_at(0.0).y, 0.0, 1e-9);
}

TEST(CenterlineSearch, ChainConcatenatesSegments) {
  const Path p = centerline_search(chain_graph(), {0.0, 0.0, 0.0}, 2);
  EXPECT_NEAR(p.length(), 270.0, 1.0);
  EXPECT_EQ(p.speed_limit_at(260.0), 12.0);
}

TEST(CenterlineSearch, ForkTakesShorterBranch) {
  const auto g = fork_graph();
  const Path p = centerline_search(g, {0.0, 0.0, 0.0}, 3);
  EXPECT_NEAR(shortest_by_enumeration(g, 0, 3), 280.0, 1e-9);
  EXPECT_NEAR(p.length(), 280.0, 1e-6);
  for (const auto& span : p.spans()) EXPECT_NE(span.segment_id, 2);
}

TEST(CenterlineSearch, UnreachableGoalThrows) {
  auto g = chain_graph();
  g.segments.push_back(segment(5, {{0, 10}, {50, 10}}, {}));
  EXPECT_THROW(centerline_search(g, {10.0, 0.0, 0.0}, 5), InvariantError);
}

TEST(GenerateProposals, FifteenProposalsInFractionMajorOrder) {
  PlannerConfig c;
  const Path center = centerline_search(straight_graph(400.0), {0.0, 0.0, 0.0}, 0);
  const auto props = generate_proposals(center, {{0.0, 0.0, 0.0}, 5.0}, c);
  ASSERT_EQ(props.size(), 15u);
  for (std::size_t i = 0; i < props.size(); ++i) {
    EXPECT_EQ(props[i].speed_fraction, c.speed_fractions[i / 3]);
    EXPECT_EQ(props[i].lateral_offset, c.lateral_offsets[i % 3]);
    EXPECT_EQ(props[i].trajectory.size(), c.horizon);
  }
  for (std::size_t i = 0; i < props.size(); ++i) {
    for (std::size_t j = i + 1; j < props.size(); ++j) {
      EXPECT_NE(props[i].trajectory.back().pose, props[j].trajectory.back().pose);
    }
  }
}

TEST(GenerateProposals, FreeRoadApproachesSpeedLimit) {
  PlannerConfig c;
  c.horizon = 600;
  const Path center = centerline_search(straight_graph(2000.0, 12.0), {0.0, 0.0, 0.0}, 0);
  const auto props = generate_proposals(center, {{0.0, 0.0, 0.0}, 0.0}, c);
  const auto& full = props[13];  // f = 1.0, offset 0
  ASSERT_EQ(full.speed_fraction, 1.0);
  ASSERT_EQ(full.lateral_offset, 0.0);
  EXPECT_NEAR(full.trajectory.back().speed, 12.0, 0.1);
  EXPECT_LT(props[1].trajectory.back().progress, full.trajectory.back().progress);
}

world::RolloutTrace empty_world(std::size_t horizon, double dt = 0.1) {
  world::RolloutTrace t;
  t.dt = dt;
  t.frames.assign(horizon, {});
  return t;
}

std::vector<TrajectoryPoint> straight_trajectory(std::size_t horizon, double speed, double dt = 0.1) {
  std::vector<TrajectoryPoint> out;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double s = speed * dt * static_cast<double>(t);
    out.push_back({{s, 0.0, 0.0}, speed, s, 0.0});
  }
  return out;
}

TEST(ScoreTrajectory, CollisionGatesComposite) {
  const auto g = straight_graph(400.0);
  const Path center = centerline_search(g, {0.0, 0.0, 0.0}, 0);
  PlannerConfig c;
  auto ego = straight_trajectory(41, 5.0);
  auto w = empty_world(41);
  scenario::AgentState other;
  other.id = 1;
  other.pose = {ego[40].pose.x + 2.0, 0.0, 0.0};
  w.frames[40] = {other};
  const auto s = score_trajectory(ego, 4.5, 2.0, w, center, g, c, 20.0);
  EXPECT_EQ(s.collision, 0.0);
  EXPECT_EQ(s.composite, 0.0);
}

TEST(ScoreTrajectory, StationaryEgoInEmptyWorld) {
  const auto g = straight_graph(400.0);
  const Path center = centerline_search(g, {0.0, 0.0, 0.0}, 0);
  PlannerConfig c;
  const auto s = score_trajectory(straight_trajectory(40, 0.0), 4.5, 2.0, empty_world(40), center, g, c, 20.0);
  EXPECT_EQ(s.collision, 1.0);
  EXPECT_EQ(s.progress_ratio, 0.0);
  const auto& wt = c.weights;
  EXPECT_NEAR(s.composite, 100.0 * (wt.speed + wt.ttc + wt.comfort) / (wt.progress + wt.speed + wt.ttc + wt.comfort),
              1e-9);
  EXPECT_NEAR(s.composite, 50.0, 1e-9);
}

TEST(ScoreTrajectory, SpeedingFramesLowerCompliance) {
  const auto g = straight_graph(2000.0, 12.0);
  const Path center = centerline_search(g, {0.0, 0.0, 0.0}, 0);
  PlannerConfig c;
  const auto legal = straight_trajectory(150, 10.0);
  auto speeding = legal;
  for (std::size_t t = 60; t < 90; ++t) speeding[t].speed = 13.0;
  const auto a = score_trajectory(legal, 4.5, 2.0, empty_world(150), center, g, c, 149.0);
  const auto b = score_trajectory(speeding, 4.5, 2.0, empty_world(150), center, g, c, 149.0);
  EXPECT_EQ(a.speed_compliance, 1.0);
  EXPECT_DOUBLE_EQ(b.speed_compliance, 0.8);
  EXPECT_LT(b.composite, a.composite);
}

TEST(ScoreTrajectory, HorizonMismatchThrows) {
  const auto g = straight_graph(400.0);
  const Path center = centerline_search(g, {0.0, 0.0, 0.0}, 0);
  EXPECT_THROW(score_trajectory(straight_trajectory(40, 1.0), 4.5, 2.0, empty_world(39), center, g, {}, 1.0),
               UsageError);
}

TEST(CompositeScore, InvariantToWeightScale) {
  ScoreBreakdown s{1.0, 1.0, 0.7, 0.9, 0.6, 0.8, 0.0};
  ScoreWeights w;
  ScoreWeights scaled{w.progress * 3.0, w.speed * 3.0, w.ttc * 3.0, w.comfort * 3.0};
  EXPECT_NEAR(composite_score(s, w), composite_score(s, scaled), 1e-12);
}

TEST(SelectBest, TieBreaksOnProgressThenOffset) {
  std::vector<Proposal> props(3);
  props[0].lateral_offset = 1.0;
  props[1].lateral_offset = 0.0;
  props[2].lateral_offset = 0.0;
  std::vector<ScoreBreakdown> scores(3);
  for (auto& s : scores) s.composite = 90.0;
  scores[0].progress_ratio = 0.9;
  scores[1].progress_ratio = 0.9;
  scores[2].progress_ratio = 0.8;
  EXPECT_EQ(select_best(props, scores), 1u);
}

// Ego alone on a straight road, ego path shared with no agents.
struct Scene {
  LaneGraph graph = straight_graph(1000.0);
  scenario::PathPtr lane;
  Path center;
  world::WorldPaths paths;
  PlanningScene scene;

  Scene(scenario::Frame agents, double ego_speed) {
    lane = scenario::chain_path(graph, {0});
    center = centerline_search(graph, {50.0, 0.0, 0.0}, 0);
    paths = testing::shared_world_paths(lane, agents.size(), graph.lane_width);
    scene.graph = &graph;
    scene.centerline = &center;
    scene.paths = &paths;
    scene.agents = std::move(agents);
    scene.ego = testing::agent_on(*lane, 0, 50.0, ego_speed);
  }
};

TEST(PlanStep, EmptyWorldSelectsFullSpeedOnCentre) {
  Scene s({}, 8.0);
  for (const auto& engine : {WorldEngine::constant_velocity(), WorldEngine::reactive(scenario::default_idm_params())}) {
    const auto r = plan_step(s.scene, engine, {});
    EXPECT_EQ(r.selected.speed_fraction, 1.0);
    EXPECT_EQ(r.selected.lateral_offset, 0.0);
  }
}

TEST(PlanStep, StoppedLeadMakesEgoDecelerate) {
  Scene s({testing::agent_on(*scenario::chain_path(straight_graph(1000.0), {0}), 1, 74.5, 0.0)}, 10.0);
  const auto r = plan_step(s.scene, WorldEngine::constant_velocity(), {});
  EXPECT_LT(r.selected.trajectory.back().speed, 10.0);
  EXPECT_EQ(r.score.collision, 1.0);
}

TEST(PlanStep, StoppedLeadClosedLoopHasNoCollision) {
  const auto graph = straight_graph(1000.0);
  const auto lane = scenario::chain_path(graph, {0});
  std::vector<scenario::Frame> frames;
  double s = 50.0;
  for (int t = 0; t < 150; ++t) {
    frames.push_back({testing::agent_on(*lane, 0, s, 10.0), testing::agent_on(*lane, 1, 74.5, 0.0)});
    s += 1.0;
  }
  const auto log = testing::straight_log(1000.0, frames);
  bench::InternalWorld internal;
  bench::ClosedLoopOptions options;
  options.start_frame = 0;
  options.reactive_environment = false;
  const auto r = bench::run_closed_loop(log, internal, scenario::default_idm_params(), {}, options);
  ASSERT_TRUE(r.error.empty()) << r.error;
  EXPECT_EQ(r.score.collision, 1.0);
  EXPECT_LT(r.executed.back().speed, 1.0);
}

TEST(PlanStep, Deterministic) {
  const auto log = scenario::generate_scenario(scenario::archetype_by_name("BOS"), 3, {});
  const auto center = centerline_search(log.lane_graph, log.ego(0).pose, log.lane_graph.goal_segment);
  const auto paths = world::paths_from_log(log);
  PlanningScene scene{&log.lane_graph, &center, &paths, world::non_ego_agents(log, 0), log.ego(0)};
  const auto engine = WorldEngine::reactive(scenario::archetype_by_name("BOS"));
  const auto a = plan_step(scene, engine, {});
  const auto b = plan_step(scene, engine, {});
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.world.frames, b.world.frames);
  ASSERT_EQ(a.selected.trajectory.size(), b.selected.trajectory.size());
  for (std::size_t t = 0; t < a.selected.trajectory.size(); ++t) {
    EXPECT_EQ(a.selected.trajectory[t].pose, b.selected.trajectory[t].pose);
  }
}

// Ramp vehicle 5 m further from the merge point than the ego but 4 m/s
// faster. Rolled forward at constant speed it overtakes the ego inside the
// taper; a reactive follower of the ego yields instead.
TEST(PlanStep, ReactiveWorldPlansMoreProgressThroughCutIn) {
  const auto layout = scenario::make_lane_layout(scenario::LaneTemplate::kMerge, {});
  const auto main = scenario::chain_path(layout.graph, scenario::lane_chain(layout.graph, 0));
  const auto ramp = scenario::chain_path(layout.graph, scenario::lane_chain(layout.graph, 10));
  const double to_merge = 50.0;
  const auto ego = testing::agent_on(*main, 0, *main->span_begin(1) - to_merge, 8.0);
  const auto cutter = testing::agent_on(*ramp, 1, *ramp->span_begin(1) - to_merge - 5.0, 12.0);

  scenario::DrivingLog log;
  log.lane_graph = layout.graph;
  log.frames = {{ego, cutter}};
  const auto paths = world::paths_from_log(log);
  const auto center = centerline_search(layout.graph, ego.pose, layout.graph.goal_segment);
  PlanningScene scene{&layout.graph, &center, &paths, {cutter}, ego};

  const auto cv = plan_step(scene, WorldEngine::constant_velocity(), {});
  const auto reactive = plan_step(scene, WorldEngine::reactive(scenario::default_idm_params()), {});
  EXPECT_GT(reactive.selected.trajectory.back().progress, cv.selected.trajectory.back().progress);
  EXPECT_GT(reactive.score.composite, cv.score.composite);
}

TEST(PlannerConfigIo, RoundTrip) {
  PlannerConfig c;
  c.horizon = 30;
  c.weights.progress = 0.6;
  c.ego_params.min_gap = 2.5;
  const auto path = std::filesystem::temp_directory_path() / "planner_config_roundtrip.json";
  save_planner_config(c, path);
  const auto back = load_planner_config(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.horizon, 30u);
  EXPECT_EQ(back.weights.progress, 0.6);
  EXPECT_EQ(back.ego_params, c.ego_params);
  EXPECT_EQ(back.speed_fractions, c.speed_fractions);
}

}  // namespace
}  // namespace adaptive::planner
