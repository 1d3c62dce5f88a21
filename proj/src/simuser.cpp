#include "teleop/simuser.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace teleop::simuser {

using std::numbers::pi;

const char* to_string(UserKind k) {
  switch (k) {
    case UserKind::Normal: return "normal";
    case UserKind::Noisy: return "noisy";
    case UserKind::Biased: return "biased";
  }
  return "?";
}

UserKind parse_user_kind(const std::string& s) {
  if (s == "normal" || s == "Normal") return UserKind::Normal;
  if (s == "noisy" || s == "Noisy") return UserKind::Noisy;
  if (s == "biased" || s == "Biased") return UserKind::Biased;
  throw InvalidArgument("unknown user model '" + s + "'");
}

double min_jerk(double tau) {
  const double t3 = tau * tau * tau;
  return t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

Vec3 palm_normal_for(double y_rotation, double roll) {
  const Vec3 n(-std::sin(y_rotation), 0.0, -std::cos(y_rotation));
  return (Eigen::AngleAxisd(roll, Vec3::UnitX()) * n).normalized();
}

Vec3 default_hand_start() { return {0.0, -0.32, 0.22}; }

namespace {

struct Sinusoid {
  Vec3 axis;
  double amplitude;
  double frequency;  // cycles per reach
  double phase;
};

}  // namespace

Vec3 neutral_hand_direction() { return Vec3(0.0, 1.0, -0.3).normalized(); }

LabeledTrajectory generate_reach_trajectory(const Vec3& start, const scene::SceneConfig& scene, int target,
                                            GraspDirection direction, double duration, double rate,
                                            std::uint64_t seed, const ReachOptions& options) {
  if (!(rate > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (target < 0 || target >= static_cast<int>(scene.objects.size()))
    throw InvalidArgument("target object index out of range");
  Rng rng(seed, "reach");
  if (duration == 0.0 || !std::isfinite(duration)) throw InvalidArgument("duration must be non-zero and finite");
  if (duration < 0.0) duration = rng.uniform(options.min_duration, options.max_duration);
  if (options.min_onset < 0.0 || options.max_onset < options.min_onset)
    throw InvalidArgument("onset bounds must satisfy 0 <= min_onset <= max_onset");
  const double onset = std::min(rng.uniform(options.min_onset, options.max_onset), 0.5 * duration);

  const Vec3 goal = scene::grasp_pose(scene.objects[target], direction).translation();
  const double final_yrot =
      (direction == GraspDirection::Top ? 0.0 : 0.5 * pi) + options.orientation_jitter * rng.normal();
  const double roll = options.orientation_jitter * rng.normal();

  std::vector<Sinusoid> waves;
  for (int k = 0; k < 3; ++k) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-9) axis = Vec3::UnitX();
    waves.push_back({axis.normalized(), options.perturbation_amplitude / 3.0 * rng.uniform(0.5, 1.0),
                     rng.uniform(0.5, 2.0), rng.uniform(0.0, 2.0 * pi)});
  }

  const int n = std::max(2, static_cast<int>(std::lround(duration * rate)) + 1);
  LabeledTrajectory traj;
  char id[64];
  std::snprintf(id, sizeof id, "reach-%016llx", static_cast<unsigned long long>(seed));
  traj.id = id;
  traj.target_object = target;
  traj.grasp_direction = direction;
  traj.rate = rate;
  traj.duration = duration;
  traj.object_positions = scene.object_positions();
  traj.states.reserve(n);

  const Vec3 neutral = neutral_hand_direction();
  const Vec3 approach = (goal - start).norm() > 1e-9 ? Vec3((goal - start).normalized()) : neutral;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1) * duration;
    const double tau = std::clamp((t - onset) / (duration - onset), 0.0, 1.0);
    const double s = min_jerk(tau);
    const double taper = std::pow(std::sin(pi * tau), 2);
    Vec3 wobble = Vec3::Zero();
    for (const auto& w : waves) wobble += w.axis * (w.amplitude * std::sin(2.0 * pi * w.frequency * tau + w.phase));
    intent::HandState h;
    h.timestamp = t;
    h.position = start + s * (goal - start) + taper * wobble;
    // The hand turns from its resting pointing direction to the approach direction as it moves.
    const Vec3 d = (1.0 - s) * neutral + s * approach;
    h.direction = d.norm() > 1e-9 ? Vec3(d.normalized()) : approach;
    h.y_rotation = options.neutral_y_rotation + s * (final_yrot - options.neutral_y_rotation);
    h.palm_normal = palm_normal_for(h.y_rotation, s * roll);
    traj.states.push_back(h);
  }
  return traj;
}

LabeledTrajectory apply_user_model(const LabeledTrajectory& traj, const UserModel& user) {
  if (user.noise_sigma < 0.0 || user.bias_sigma < 0.0) throw InvalidArgument("user sigmas must be non-negative");
  if (user.kind == UserKind::Normal) return traj;
  LabeledTrajectory out = traj;
  Rng rng(user.seed, user.kind == UserKind::Noisy ? "user-noisy" : "user-biased");
  Vec3 offset = Vec3::Zero();
  if (user.kind == UserKind::Biased) offset = Vec3(rng.normal(), rng.normal(), rng.normal()) * user.bias_sigma;
  for (auto& s : out.states) {
    if (user.kind == UserKind::Noisy) {
      s.position += Vec3(rng.normal(), rng.normal(), rng.normal()) * user.noise_sigma;
    } else {
      s.position += offset;
    }
  }
  return out;
}

scene::SceneConfig layout_variant(const scene::SceneConfig& base, int layout, std::uint64_t seed) {
  if (layout == 0) return base;
  Rng rng(seed, "layout", static_cast<std::uint64_t>(layout));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    scene::SceneConfig s = base;
    for (auto& o : s.objects) {
      const Vec3 t = o.pose.translation() + Vec3(rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04), 0.0);
      o.pose = Pose(o.pose.rotation(), t);
    }
    try {
      s.validate();
      return s;
    } catch (const std::invalid_argument&) {
    }
  }
  return base;
}

std::vector<LabeledTrajectory> generate_dataset(const scene::SceneConfig& scene, int count, double rate,
                                                std::uint64_t seed, const ReachOptions& options) {
  if (count < 1) throw InvalidArgument("dataset count must be positive");
  std::vector<scene::SceneConfig> layouts;
  for (int l = 0; l < kNumLayouts; ++l) layouts.push_back(layout_variant(scene, l, seed));
  const int num_objects = static_cast<int>(scene.objects.size());
  const int num_classes = num_objects * scene::kNumDirections;

  std::vector<LabeledTrajectory> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int cls = i % num_classes;
    const int target = cls / scene::kNumDirections;
    const auto direction = static_cast<GraspDirection>(cls % scene::kNumDirections);
    const auto& layout = layouts[(i / num_classes) % kNumLayouts];
    Rng rng(seed, "dataset-start", static_cast<std::uint64_t>(i));
    const Vec3 start = default_hand_start() + Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                                                   rng.uniform(-0.05, 0.05));
    auto traj = generate_reach_trajectory(start, layout, target, direction, -1.0, rate,
                                          derive_seed(seed, "dataset-reach", static_cast<std::uint64_t>(i)), options);
    char id[32];
    std::snprintf(id, sizeof id, "traj-%04d", i);
    traj.id = id;
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace teleop::simuser
