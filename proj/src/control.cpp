#include "teleop/control.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace teleop::control {

const char* to_string(Mode m) { return m == Mode::Early ? "early" : "late"; }

Mode parse_mode(const std::string& s) {
  if (s == "early" || s == "Early") return Mode::Early;
  if (s == "late" || s == "Late") return Mode::Late;
  throw InvalidArgument("unknown mode '" + s + "'");
}

void TimingParams::validate() const {
  if (!(planning_budget > 0.0) || !(execution_speed > 0.0) || !(inter_grasp_pause > 0.0) || !(sim_tick > 0.0))
    throw InvalidArgument("timing parameters must all be positive");
}

double Plan::path_length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    len += (waypoints[i].pose.translation() - waypoints[i - 1].pose.translation()).norm();
  return len;
}

double acceleration_cost(const std::vector<Vec3>& knots) {
  double cost = 0.0;
  for (std::size_t i = 1; i + 1 < knots.size(); ++i) cost += (knots[i + 1] - 2.0 * knots[i] + knots[i - 1]).squaredNorm();
  return cost;
}

Pose default_robot_home() { return Pose::from_axis_angle(Vec3::UnitX(), std::numbers::pi, Vec3(0.0, 0.45, 0.3)); }

Plan plan_reach(const Pose& current, const Pose& goal, int num_knots, const TimingParams& timing) {
  if (num_knots < 3) throw InvalidArgument("plan_reach needs at least 3 knots");
  timing.validate();
  const int k = num_knots;
  const int interior = k - 2;

  // Second-difference operator rows i = 1..k-2 over knots 0..k-1, split into the
  // interior block and the fixed endpoint columns.
  Eigen::MatrixXd d_int = Eigen::MatrixXd::Zero(k - 2, interior);
  Eigen::MatrixXd d_end = Eigen::MatrixXd::Zero(k - 2, 2);
  for (int row = 0; row < k - 2; ++row) {
    const int centre = row + 1;
    const int cols[3] = {centre - 1, centre, centre + 1};
    const double coef[3] = {1.0, -2.0, 1.0};
    for (int c = 0; c < 3; ++c) {
      if (cols[c] == 0) d_end(row, 0) += coef[c];
      else if (cols[c] == k - 1) d_end(row, 1) += coef[c];
      else d_int(row, cols[c] - 1) += coef[c];
    }
  }
  Eigen::MatrixXd ends(2, 3);
  ends.row(0) = current.translation().transpose();
  ends.row(1) = goal.translation().transpose();
  const Eigen::MatrixXd normal = d_int.transpose() * d_int;
  const Eigen::MatrixXd rhs = -d_int.transpose() * (d_end * ends);
  const Eigen::MatrixXd x = normal.ldlt().solve(rhs);

  std::vector<Vec3> knots(k);
  knots.front() = current.translation();
  knots.back() = goal.translation();
  for (int i = 0; i < interior; ++i) knots[i + 1] = x.row(i).transpose();

  Plan plan;
  plan.planning_cost = acceleration_cost(knots);
  plan.planning_time = timing.planning_budget;
  double time = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i > 0) time += std::max((knots[i] - knots[i - 1]).norm() / timing.execution_speed, timing.sim_tick);
    Pose pose;
    if (i == 0) pose = current;
    else if (i == k - 1) pose = goal;
    else pose = Pose(current.rotation().slerp(static_cast<double>(i) / (k - 1), goal.rotation()), knots[i]);
    plan.waypoints.push_back({time, pose});
  }
  return plan;
}

double EpisodeLog::total_time_until_execution() const {
  double s = 0.0;
  for (const auto& g : grasps) s += g.time_until_execution;
  return s;
}

double EpisodeLog::object_accuracy() const {
  if (grasps.empty()) return 0.0;
  return static_cast<double>(std::count_if(grasps.begin(), grasps.end(), [](const auto& g) { return g.object_correct; })) /
         static_cast<double>(grasps.size());
}

double EpisodeLog::direction_accuracy() const {
  if (grasps.empty()) return 0.0;
  return static_cast<double>(
             std::count_if(grasps.begin(), grasps.end(), [](const auto& g) { return g.direction_correct; })) /
         static_cast<double>(grasps.size());
}

EpisodeLog run_episode(Mode mode, const scene::SceneConfig& scene,
                       const std::vector<intent::LabeledTrajectory>& user_trajs, const intent::MlpParams& params,
                       const intent::GateConfig& gate_cfg, const TimingParams& timing, const Pose& robot_home) {
  timing.validate();
  const int num_objects = static_cast<int>(scene.objects.size());
  if (user_trajs.size() != static_cast<std::size_t>(num_objects))
    throw InvalidArgument("an episode needs one trajectory per scene object");
  std::vector<bool> seen(num_objects, false);
  for (const auto& t : user_trajs) {
    if (t.target_object < 0 || t.target_object >= num_objects || seen[t.target_object])
      throw InvalidArgument("episode trajectories must target distinct objects");
    seen[t.target_object] = true;
  }

  EpisodeLog log;
  log.mode = mode;
  std::vector<bool> retrieved(num_objects, false);
  const auto positions = scene.object_positions();
  double clock = 0.0;
  for (const auto& traj : user_trajs) {
    GraspRecord rec;
    rec.target_object = traj.target_object;
    rec.target_direction = traj.grasp_direction;
    rec.phase_start = clock;

    intent::GateState gate;
    intent::Target last{};
    for (const auto& state : traj.states) {
      last = intent::predict(params, intent::extract_features(state, positions), retrieved).target;
      gate = intent::gate_update(gate_cfg, gate, last);
      if (gate.committed) break;
    }
    const int samples = static_cast<int>(traj.states.size());
    rec.demo_end = rec.phase_start + samples * timing.sim_tick;
    intent::Target committed;
    if (gate.committed) {
      committed = gate.committed->target;
      rec.commit_step = gate.committed->commit_step;
    } else {
      committed = last;
      rec.commit_step = samples;
      rec.fallback = true;
    }
    rec.commit_time = rec.phase_start + rec.commit_step * timing.sim_tick;
    rec.committed_object = committed.object;
    rec.committed_direction = committed.direction;

    if (mode == Mode::Early && !rec.fallback) {
      rec.planning_start = rec.commit_time;
      rec.execution_start = std::max(rec.commit_time + timing.planning_budget, rec.demo_end);
    } else {
      rec.planning_start = rec.demo_end;
      rec.execution_start = rec.demo_end + timing.planning_budget;
    }
    const Pose goal = scene::grasp_pose(scene.objects[committed.object], committed.direction);
    const Plan plan = plan_reach(robot_home, goal, kDefaultKnots, timing);
    rec.execution_end = rec.execution_start + plan.path_length() / timing.execution_speed;
    rec.time_until_execution = rec.execution_start - rec.phase_start;
    rec.object_correct = committed.object == traj.target_object;
    rec.direction_correct = committed.direction == traj.grasp_direction;

    retrieved[committed.object] = true;
    clock = rec.execution_end + timing.inter_grasp_pause;
    log.episode_duration = rec.execution_end;
    log.grasps.push_back(rec);
  }
  return log;
}

ExperimentConfig ExperimentConfig::table_defaults(std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.users = {{simuser::UserKind::Normal}, {simuser::UserKind::Noisy}, {simuser::UserKind::Biased}};
  return c;
}

void ExperimentConfig::validate() const {
  if (users.empty()) throw ConfigError("experiment names no user models");
  if (modes.empty()) throw ConfigError("experiment names no modes");
  if (episodes < 1) throw ConfigError("experiment episode count must be positive");
  if (!(rate > 0.0)) throw ConfigError("experiment sample rate must be positive");
  if (gate.consecutive_required < 1 || gate.warmup_steps < 0) throw ConfigError("invalid gate configuration");
  timing.validate();
}

Stat summarize(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

scene::SceneConfig episode_scene(const scene::SceneConfig& scene, const ExperimentConfig& config, int episode) {
  return simuser::layout_variant(scene, episode % simuser::kNumLayouts, derive_seed(config.seed, "episode-layout"));
}

std::vector<intent::LabeledTrajectory> episode_trajectories(const scene::SceneConfig& scene,
                                                            const ExperimentConfig& config,
                                                            const simuser::UserModel& user, int episode) {
  const scene::SceneConfig layout = episode_scene(scene, config, episode);
  const int n = static_cast<int>(layout.objects.size());
  Rng rng(config.seed, "episode", static_cast<std::uint64_t>(episode));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  std::vector<intent::LabeledTrajectory> out;
  for (int g = 0; g < n; ++g) {
    const auto direction = static_cast<GraspDirection>(rng.below(scene::kNumDirections));
    const Vec3 start = simuser::default_hand_start() +
                       Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
    const auto reach_seed = derive_seed(config.seed, "episode-reach", static_cast<std::uint64_t>(episode * n + g));
    auto traj = simuser::generate_reach_trajectory(start, layout, order[g], direction, -1.0, config.rate, reach_seed,
                                                   config.reach);
    simuser::UserModel u = user;
    u.seed = derive_seed(config.seed, simuser::to_string(user.kind), static_cast<std::uint64_t>(episode * n + g));
    out.push_back(simuser::apply_user_model(traj, u));
  }
  return out;
}

ExperimentResult run_experiment(const scene::SceneConfig& scene, const intent::MlpParams& params,
                                const ExperimentConfig& config) {
  config.validate();
  scene.validate();
  ExperimentResult result;
  for (const auto& user : config.users) {
    std::vector<std::vector<intent::LabeledTrajectory>> trajs;
    std::vector<scene::SceneConfig> layouts;
    for (int e = 0; e < config.episodes; ++e) {
      layouts.push_back(episode_scene(scene, config, e));
      trajs.push_back(episode_trajectories(scene, config, user, e));
    }
    for (Mode mode : config.modes) {
      SummaryRow row;
      row.user = user.kind;
      row.mode = mode;
      row.episodes = config.episodes;
      std::vector<double> tue, dur, oacc, dacc;
      for (int e = 0; e < config.episodes; ++e) {
        EpisodeLog log = run_episode(mode, layouts[e], trajs[e], params, config.gate, config.timing);
        tue.push_back(log.total_time_until_execution());
        dur.push_back(log.episode_duration);
        oacc.push_back(log.object_accuracy());
        dacc.push_back(log.direction_accuracy());
        row.fallback_commits +=
            static_cast<int>(std::count_if(log.grasps.begin(), log.grasps.end(), [](const auto& g) { return g.fallback; }));
        result.logs.push_back(std::move(log));
      }
      row.time_until_execution = summarize(tue);
      row.episode_duration = summarize(dur);
      row.object_accuracy = summarize(oacc);
      row.direction_accuracy = summarize(dacc);
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace teleop::control
