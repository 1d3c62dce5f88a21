#pragma once

#include "teleop/intent.hpp"
#include "teleop/scene.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace teleop::simuser {

using intent::LabeledTrajectory;
using scene::GraspDirection;

enum class UserKind { Normal, Noisy, Biased };

const char* to_string(UserKind k);
UserKind parse_user_kind(const std::string& s);

struct UserModel {
  UserKind kind = UserKind::Normal;
  double noise_sigma = 0.01;  // m, Noisy
  double bias_sigma = 0.02;   // m, Biased
  std::uint64_t seed = 0;
};

struct ReachOptions {
  double perturbation_amplitude = 0.01;  // m, bound on the summed sinusoids
  double neutral_y_rotation = 0.35;      // rad, palm tilt at the start of a reach
  double orientation_jitter = 0.1;       // rad, per-trajectory std of the final palm tilt
  double min_duration = 2.0;
  double max_duration = 5.0;
  double min_onset = 0.1;  // s the hand idles after recording starts, part of the duration
  double max_onset = 0.4;
};

/// Pointing direction of the hand before it turns towards a goal.
Vec3 neutral_hand_direction();

/// Quintic time scaling 10 s^3 - 15 s^4 + 6 s^5.
double min_jerk(double tau);

/// Palm normal for a palm facing down, rotated by `y_rotation` about world y and `roll` about x.
Vec3 palm_normal_for(double y_rotation, double roll = 0.0);

/// Minimum-jerk reach from `start` to the grasp point of object `target` with smooth tapered
/// perturbation; duration <= 0 draws one uniformly from the option bounds.
LabeledTrajectory generate_reach_trajectory(const Vec3& start, const scene::SceneConfig& scene, int target,
                                            GraspDirection direction, double duration, double rate,
                                            std::uint64_t seed, const ReachOptions& options = {});

LabeledTrajectory apply_user_model(const LabeledTrajectory& traj, const UserModel& user);

/// Copy of `scene` with object positions jittered in the table plane; layout 0 is the original.
scene::SceneConfig layout_variant(const scene::SceneConfig& scene, int layout, std::uint64_t seed);

inline constexpr int kNumLayouts = 4;
inline constexpr double kDefaultRate = 180.0;
Vec3 default_hand_start();

/// `count` reaches balanced over (object x direction), spread over kNumLayouts layouts.
std::vector<LabeledTrajectory> generate_dataset(const scene::SceneConfig& scene, int count, double rate,
                                                std::uint64_t seed, const ReachOptions& options = {});

}  // namespace teleop::simuser
