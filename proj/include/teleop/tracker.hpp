#pragma once

#include "teleop/geometry.hpp"
#include "teleop/scene.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace teleop::tracker {

struct TrackerConfig {
  int num_particles = 200;
  double diffusion_trans = 0.002;           // m, per step
  double diffusion_rot = 0.017453292519943; // rad, per step (1 degree)
  double likelihood_sigma = 0.005;          // m
  double resample_threshold = 0.5;          // fraction of N
  std::uint64_t seed = 0;
  int max_model_points = 200;
  int max_observed_points = 300;
  /// Camera centre; when set, only model points facing it enter the likelihood.
  std::optional<Vec3> view_point;

  void validate() const;
};

struct Particle {
  Pose pose;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  Pose estimate;
  int step_count = 0;
  TrackerConfig config;

  double weight_sum() const;
  double effective_sample_size() const;
};

/// The observation is too far from every particle for any weight to survive.
class TrackerDiverged : public std::runtime_error {
 public:
  TrackerDiverged(const Pose& last_estimate, int step)
      : std::runtime_error("tracker diverged at step " + std::to_string(step)), last_estimate_(last_estimate) {}
  const Pose& last_estimate() const { return last_estimate_; }

 private:
  Pose last_estimate_;
};

ParticleSet init_tracker(const Pose& init, const TrackerConfig& config);

/// Diffuse, weight against `observed`, estimate, resample.
ParticleSet track_step(const ParticleSet& state, const scene::ObjectModel& model, const PointCloud& observed);

inline const Pose& estimate(const ParticleSet& state) { return state.estimate; }

/// Weighted translation mean and sign-aligned, renormalised quaternion mean.
Pose weighted_mean_pose(const std::vector<Particle>& particles);

/// Indices drawn by systematic resampling from normalised weights, using one uniform `u0` in [0, 1).
std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, double u0);

}  // namespace teleop::tracker
