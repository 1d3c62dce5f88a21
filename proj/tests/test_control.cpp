#include "control_fixtures.hpp"
#include "support.hpp"

#include "teleop/control.hpp"

#include <doctest.h>

using namespace teleop;
using namespace teleop::control;
using teleop::testing::hold_on;
using teleop::testing::nearest_object_classifier;

TEST_CASE("planning between equal poses is free") {
  const Pose p = default_robot_home();
  const auto plan = plan_reach(p, p, 10, TimingParams{});
  CHECK(plan.planning_cost < 1e-24);
  for (const auto& w : plan.waypoints) {
    CHECK((w.pose.translation() - p.translation()).norm() < 1e-12);
    CHECK(w.pose.rotation().angularDistance(p.rotation()) < 1e-9);
  }
  CHECK(plan.planning_time == TimingParams{}.planning_budget);
}

TEST_CASE("planned knots lie evenly on the straight line") {
  Rng rng(2);
  for (int k : {3, 5, 20, 41}) {
    const Pose a = teleop::testing::random_pose(rng, 3.0, 0.5), b = teleop::testing::random_pose(rng, 3.0, 0.5);
    const auto plan = plan_reach(a, b, k, TimingParams{});
    REQUIRE(plan.waypoints.size() == static_cast<std::size_t>(k));
    CHECK(plan.waypoints.front().pose.to_array() == a.to_array());
    CHECK(plan.waypoints.back().pose.to_array() == b.to_array());
    for (int i = 0; i < k; ++i) {
      const Vec3 expected = a.translation() + (b.translation() - a.translation()) * (static_cast<double>(i) / (k - 1));
      CHECK((plan.waypoints[i].pose.translation() - expected).norm() < 1e-9);
      if (i > 0) CHECK(plan.waypoints[i].time > plan.waypoints[i - 1].time);
    }
    CHECK(plan.waypoints.front().time == 0.0);
    CHECK(plan.waypoints.back().time ==
          doctest::Approx((b.translation() - a.translation()).norm() / TimingParams{}.execution_speed));
    CHECK(plan.planning_cost < 1e-18);
  }
  CHECK_THROWS_AS(plan_reach(Pose(), Pose(), 2, TimingParams{}), std::invalid_argument);
}

TEST_CASE("planned knots beat random feasible sequences") {
  Rng rng(3);
  const std::vector<Vec3> ends{Vec3(0, 0, 0), Vec3(0.3, -0.2, 0.1)};
  const auto plan = plan_reach(Pose::from_translation(ends[0]), Pose::from_translation(ends[1]), 12, TimingParams{});
  std::vector<Vec3> best;
  for (const auto& w : plan.waypoints) best.push_back(w.pose.translation());
  const double c = acceleration_cost(best);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> knots = best;
    for (std::size_t i = 1; i + 1 < knots.size(); ++i) knots[i] += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.05;
    CHECK(c <= acceleration_cost(knots));
  }
}

TEST_CASE("episode schedules in both modes") {
  const auto s = scene::tabletop_scene();
  const auto params = nearest_object_classifier();
  const TimingParams timing;
  const std::vector<intent::LabeledTrajectory> trajs{hold_on(s, 2, scene::GraspDirection::Top, 500),
                                                     hold_on(s, 0, scene::GraspDirection::Right, 800),
                                                     hold_on(s, 1, scene::GraspDirection::Top, 1000)};
  const auto early = run_episode(Mode::Early, s, trajs, params, intent::GateConfig{}, timing);
  const auto late = run_episode(Mode::Late, s, trajs, params, intent::GateConfig{}, timing);
  REQUIRE(early.grasps.size() == 3);
  REQUIRE(late.grasps.size() == 3);
  double saved = 0.0;
  for (std::size_t g = 0; g < 3; ++g) {
    const auto& e = early.grasps[g];
    const auto& l = late.grasps[g];
    CHECK(e.commit_step == 380);
    CHECK_FALSE(e.fallback);
    CHECK(e.object_correct);
    CHECK(e.direction_correct);
    CHECK(e.execution_start >= e.planning_start + timing.planning_budget - 1e-12);
    CHECK(e.execution_start >= e.demo_end - 1e-12);
    CHECK(l.planning_start == l.demo_end);
    CHECK(l.execution_start == doctest::Approx(l.demo_end + timing.planning_budget));
    CHECK(e.time_until_execution <= l.time_until_execution + 1e-12);
    saved += std::min(timing.planning_budget, e.demo_end - e.commit_time);
  }
  // Each grasp shifts every later event by the overlap it gained.
  CHECK(early.episode_duration == doctest::Approx(late.episode_duration - saved).epsilon(1e-12));
  CHECK(saved == doctest::Approx(120.0 / 180.0 + 2 * timing.planning_budget));
  CHECK(early.object_accuracy() == 1.0);
  CHECK(early.direction_accuracy() == 1.0);
  CHECK(early.episode_duration > 0.0);
}

TEST_CASE("a vanishing planning budget makes the modes equal") {
  const auto s = scene::tabletop_scene();
  TimingParams timing;
  timing.planning_budget = 1e-9;
  const std::vector<intent::LabeledTrajectory> trajs{hold_on(s, 0, scene::GraspDirection::Top, 600),
                                                     hold_on(s, 1, scene::GraspDirection::Top, 700),
                                                     hold_on(s, 2, scene::GraspDirection::Top, 900)};
  const auto params = nearest_object_classifier();
  const auto e = run_episode(Mode::Early, s, trajs, params, intent::GateConfig{}, timing);
  const auto l = run_episode(Mode::Late, s, trajs, params, intent::GateConfig{}, timing);
  CHECK(std::abs(e.episode_duration - l.episode_duration) <= timing.sim_tick);
}

TEST_CASE("short demonstrations fall back to the final prediction") {
  const auto s = scene::tabletop_scene();
  const std::vector<intent::LabeledTrajectory> trajs{hold_on(s, 1, scene::GraspDirection::Right, 300),
                                                     hold_on(s, 0, scene::GraspDirection::Top, 500),
                                                     hold_on(s, 2, scene::GraspDirection::Top, 379)};
  const auto log = run_episode(Mode::Early, s, trajs, nearest_object_classifier(), intent::GateConfig{}, TimingParams{});
  CHECK(log.grasps[0].fallback);
  CHECK(log.grasps[0].committed_object == 1);
  CHECK(log.grasps[0].execution_start == doctest::Approx(log.grasps[0].demo_end + TimingParams{}.planning_budget));
  CHECK_FALSE(log.grasps[1].fallback);
  CHECK(log.grasps[2].fallback);
}

TEST_CASE("retrieved objects are not predicted again") {
  const auto s = scene::tabletop_scene();
  // The second demonstration hovers over object 0 again; with 0 retrieved, the classifier's
  // next-best object must be chosen.
  auto second = hold_on(s, 0, scene::GraspDirection::Top, 500);
  second.target_object = 1;
  const std::vector<intent::LabeledTrajectory> trajs{hold_on(s, 0, scene::GraspDirection::Top, 500), second,
                                                     hold_on(s, 2, scene::GraspDirection::Top, 500)};
  const auto log = run_episode(Mode::Late, s, trajs, nearest_object_classifier(), intent::GateConfig{}, TimingParams{});
  CHECK(log.grasps[0].committed_object == 0);
  CHECK(log.grasps[1].committed_object != 0);
}

TEST_CASE("episode arguments are checked") {
  const auto s = scene::tabletop_scene();
  const auto p = nearest_object_classifier();
  const std::vector<intent::LabeledTrajectory> dup{hold_on(s, 0, scene::GraspDirection::Top, 400),
                                                   hold_on(s, 0, scene::GraspDirection::Top, 400),
                                                   hold_on(s, 2, scene::GraspDirection::Top, 400)};
  CHECK_THROWS_AS(run_episode(Mode::Early, s, dup, p, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(run_episode(Mode::Early, s, {dup[0]}, p, {}, {}), std::invalid_argument);
  TimingParams bad;
  bad.execution_speed = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("summary statistics") {
  const auto st = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(st.mean == 2.5);
  CHECK(st.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(summarize({7.0}).stddev == 0.0);
}

TEST_CASE("experiment grid is deterministic and mode-paired") {
  auto cfg = ExperimentConfig::table_defaults(4);
  cfg.episodes = 2;
  const auto s = scene::tabletop_scene();
  const auto params = nearest_object_classifier();
  const auto a = run_experiment(s, params, cfg);
  const auto b = run_experiment(s, params, cfg);
  REQUIRE(a.rows.size() == 6);
  REQUIRE(a.logs.size() == 12);
  for (std::size_t i = 0; i < a.logs.size(); ++i) CHECK(a.logs[i].episode_duration == b.logs[i].episode_duration);
  // Early and Late of one user see the same demonstrations.
  for (int e = 0; e < 2; ++e)
    for (std::size_t g = 0; g < 3; ++g)
      CHECK(a.logs[e].grasps[g].demo_end - a.logs[e].grasps[g].phase_start ==
            doctest::Approx(a.logs[2 + e].grasps[g].demo_end - a.logs[2 + e].grasps[g].phase_start));
  const auto trajs = episode_trajectories(s, cfg, cfg.users[0], 0);
  CHECK(trajs.size() == 3);
  auto bad = cfg;
  bad.users.clear();
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.episodes = 0;
  CHECK_THROWS(bad.validate());
}
