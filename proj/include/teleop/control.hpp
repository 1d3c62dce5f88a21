#pragma once

#include "teleop/intent.hpp"
#include "teleop/scene.hpp"
#include "teleop/simuser.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace teleop::control {

using scene::GraspDirection;

enum class Mode { Early, Late };
const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct TimingParams {
  double planning_budget = 1.67;      // s per plan
  double execution_speed = 0.15;      // m/s
  double inter_grasp_pause = 2.0;     // s
  double sim_tick = 1.0 / 180.0;      // s per hand sample

  void validate() const;
};

struct Waypoint {
  double time = 0.0;  // s from execution start
  Pose pose;
};

struct Plan {
  std::vector<Waypoint> waypoints;
  double planning_cost = 0.0;
  double planning_time = 0.0;

  double path_length() const;
};

/// Sum of squared second differences of the knot sequence.
double acceleration_cost(const std::vector<Vec3>& knots);

/// Minimum-acceleration knot sequence between fixed endpoints; rotation follows the geodesic.
Plan plan_reach(const Pose& current, const Pose& goal, int num_knots, const TimingParams& timing);

inline constexpr int kDefaultKnots = 20;
Pose default_robot_home();

struct GraspRecord {
  int target_object = 0;
  GraspDirection target_direction = GraspDirection::Top;
  int committed_object = 0;
  GraspDirection committed_direction = GraspDirection::Top;
  int commit_step = 0;
  bool fallback = false;  // gate never committed; argmax at the last sample was used
  double phase_start = 0.0;
  double commit_time = 0.0;
  double demo_end = 0.0;
  double planning_start = 0.0;
  double execution_start = 0.0;
  double execution_end = 0.0;
  double time_until_execution = 0.0;
  bool object_correct = false;
  bool direction_correct = false;
};

struct EpisodeLog {
  Mode mode = Mode::Early;
  std::vector<GraspRecord> grasps;
  double episode_duration = 0.0;

  double total_time_until_execution() const;
  double object_accuracy() const;
  double direction_accuracy() const;
};

/// Simulates one traded-control episode: one grasp phase per trajectory, in the given order.
EpisodeLog run_episode(Mode mode, const scene::SceneConfig& scene,
                       const std::vector<intent::LabeledTrajectory>& user_trajs, const intent::MlpParams& params,
                       const intent::GateConfig& gate_cfg, const TimingParams& timing,
                       const Pose& robot_home = default_robot_home());

struct ExperimentConfig {
  std::vector<simuser::UserModel> users;  // seed field is ignored; seeds derive from `seed`
  std::vector<Mode> modes = {Mode::Early, Mode::Late};
  int episodes = 12;
  std::uint64_t seed = 0;
  intent::GateConfig gate;
  TimingParams timing;
  simuser::ReachOptions reach;
  double rate = simuser::kDefaultRate;

  static ExperimentConfig table_defaults(std::uint64_t seed = 0);
  void validate() const;
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};
Stat summarize(const std::vector<double>& values);

struct SummaryRow {
  simuser::UserKind user = simuser::UserKind::Normal;
  Mode mode = Mode::Early;
  int episodes = 0;
  Stat time_until_execution;  // summed over the grasps of an episode
  Stat episode_duration;
  Stat object_accuracy;
  Stat direction_accuracy;
  int fallback_commits = 0;
};

struct ExperimentResult {
  std::vector<SummaryRow> rows;
  /// rows.size() blocks of `episodes` logs, in row order.
  std::vector<EpisodeLog> logs;
};

/// Object layout used by episode `episode`.
scene::SceneConfig episode_scene(const scene::SceneConfig& scene, const ExperimentConfig& config, int episode);

/// The three reaches of episode `episode` for `user`, identical across modes.
std::vector<intent::LabeledTrajectory> episode_trajectories(const scene::SceneConfig& scene,
                                                            const ExperimentConfig& config,
                                                            const simuser::UserModel& user, int episode);

ExperimentResult run_experiment(const scene::SceneConfig& scene, const intent::MlpParams& params,
                                const ExperimentConfig& config);

}  // namespace teleop::control
