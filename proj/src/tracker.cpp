#include "teleop/tracker.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace teleop::tracker {

void TrackerConfig::validate() const {
  if (num_particles < 2) throw InvalidArgument("num_particles must be at least 2");
  if (!(diffusion_trans >= 0.0) || !(diffusion_rot >= 0.0)) throw InvalidArgument("diffusion stds must be >= 0");
  if (!(likelihood_sigma > 0.0)) throw InvalidArgument("likelihood_sigma must be positive");
  if (!(resample_threshold > 0.0 && resample_threshold <= 1.0))
    throw InvalidArgument("resample_threshold must be in (0, 1]");
  if (max_model_points < 3 || max_observed_points < 1) throw InvalidArgument("point budgets too small");
}

double ParticleSet::weight_sum() const {
  double s = 0.0;
  for (const auto& p : particles) s += p.weight;
  return s;
}

double ParticleSet::effective_sample_size() const {
  double s = 0.0;
  for (const auto& p : particles) s += p.weight * p.weight;
  return s > 0.0 ? 1.0 / s : 0.0;
}

namespace {

Pose diffuse(const Pose& pose, const TrackerConfig& cfg, Rng& rng) {
  const Vec3 dt(rng.normal(), rng.normal(), rng.normal());
  const Vec3 dr(rng.normal(), rng.normal(), rng.normal());
  return {pose.rotation() * quat_exp(dr * cfg.diffusion_rot), pose.translation() + dt * cfg.diffusion_trans};
}

std::vector<std::size_t> subset_indices(std::size_t n, int max_points, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= static_cast<std::size_t>(max_points)) return idx;
  for (int i = 0; i < max_points; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, double u0) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  double cumulative = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (u0 + static_cast<double>(i)) / static_cast<double>(n);
    while (u > cumulative && j + 1 < n) cumulative += weights[++j];
    out[i] = j;
  }
  return out;
}

Pose weighted_mean_pose(const std::vector<Particle>& particles) {
  const auto best = std::max_element(particles.begin(), particles.end(),
                                     [](const Particle& a, const Particle& b) { return a.weight < b.weight; });
  const Quat& ref = best->pose.rotation();
  Vec3 t = Vec3::Zero();
  Eigen::Vector4d q = Eigen::Vector4d::Zero();
  double total = 0.0;
  for (const auto& p : particles) {
    t += p.weight * p.pose.translation();
    Eigen::Vector4d c = p.pose.rotation().coeffs();
    if (p.pose.rotation().dot(ref) < 0.0) c = -c;
    q += p.weight * c;
    total += p.weight;
  }
  Quat mean;
  mean.coeffs() = q;
  return {mean, t / total};
}

ParticleSet init_tracker(const Pose& init, const TrackerConfig& config) {
  config.validate();
  Rng rng(config.seed, "tracker-init");
  ParticleSet set;
  set.config = config;
  set.estimate = init;
  set.particles.reserve(config.num_particles);
  const double w = 1.0 / config.num_particles;
  for (int i = 0; i < config.num_particles; ++i) set.particles.push_back({diffuse(init, config, rng), w});
  return set;
}

ParticleSet track_step(const ParticleSet& state, const scene::ObjectModel& model, const PointCloud& observed) {
  const TrackerConfig& cfg = state.config;
  const int step = state.step_count + 1;
  Rng rng(cfg.seed, "tracker-step", static_cast<std::uint64_t>(step));

  // Likelihood support: fixed model subset, per-step observed subset.
  Rng model_rng(cfg.seed, "tracker-model");
  const auto model_idx = subset_indices(model.reference_points.size(), cfg.max_model_points, model_rng);
  std::vector<Vec3> model_pts;
  std::vector<Vec3> model_normals;
  for (auto i : model_idx) {
    model_pts.push_back(model.reference_points[i]);
    model_normals.push_back(model.reference_normals.at(i));
  }
  const auto obs_idx = subset_indices(observed.size(), cfg.max_observed_points, rng);
  std::vector<Vec3> obs;
  for (auto i : obs_idx) obs.push_back(observed[i]);
  const KdTree obs_tree(obs);

  ParticleSet next;
  next.config = cfg;
  next.step_count = step;
  next.particles.reserve(state.particles.size());

  const double inv_two_var = 0.5 / (cfg.likelihood_sigma * cfg.likelihood_sigma);
  std::vector<Vec3> visible;
  std::vector<double> weights;
  weights.reserve(state.particles.size());
  for (const auto& particle : state.particles) {
    const Pose pose = diffuse(particle.pose, cfg, rng);
    const Mat3 r = pose.rotation_matrix();
    visible.clear();
    double model_to_obs = 0.0;
    for (std::size_t k = 0; k < model_pts.size(); ++k) {
      const Vec3 p = r * model_pts[k] + pose.translation();
      if (cfg.view_point && (r * model_normals[k]).dot(*cfg.view_point - p) <= 0.0) continue;
      visible.push_back(model_pts[k]);
      model_to_obs += std::sqrt(obs_tree.nearest_squared(p));
    }
    if (visible.empty()) {
      visible = model_pts;
      model_to_obs = 0.0;
      for (const auto& m : model_pts) model_to_obs += std::sqrt(obs_tree.nearest_squared(r * m + pose.translation()));
    }
    model_to_obs /= static_cast<double>(visible.size());

    const KdTree model_tree(visible);
    const Pose inv = pose.inverse();
    const Mat3 ri = inv.rotation_matrix();
    double obs_to_model = 0.0;
    for (const auto& o : obs) obs_to_model += std::sqrt(model_tree.nearest_squared(ri * o + inv.translation()));
    obs_to_model /= static_cast<double>(obs.size());

    const double d = 0.5 * (model_to_obs + obs_to_model);
    const double w = particle.weight * std::exp(-d * d * inv_two_var);
    weights.push_back(w);
    next.particles.push_back({pose, w});
  }

  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) throw TrackerDiverged(state.estimate, step);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] /= total;
    next.particles[i].weight = weights[i];
  }
  next.estimate = weighted_mean_pose(next.particles);

  if (next.effective_sample_size() < cfg.resample_threshold * static_cast<double>(weights.size())) {
    const auto picks = systematic_resample(weights, rng.uniform());
    std::vector<Particle> resampled;
    resampled.reserve(picks.size());
    const double w = 1.0 / static_cast<double>(picks.size());
    for (auto i : picks) resampled.push_back({next.particles[i].pose, w});
    next.particles = std::move(resampled);
  }
  return next;
}

}  // namespace teleop::tracker
