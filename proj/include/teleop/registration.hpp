#pragma once

#include "teleop/geometry.hpp"
#include "teleop/scene.hpp"

#include <cstdint>
#include <vector>

namespace teleop::registration {

struct CpdParams {
  double outlier_weight = 0.1;  // w in [0, 1)
  int max_iterations = 100;
  double tolerance = 1e-6;      // relative change of the negative log-likelihood
  double init_sigma2 = 0.0;     // m^2, 0 = mean squared cross-pair distance / 3
  int max_reference_points = 400;
  std::uint64_t seed = 0;       // reference downsampling

  void validate() const;
};

struct RegistrationResult {
  Pose pose;  // maps the reference frame into the observed frame
  int iterations_used = 0;
  double final_sigma2 = 0.0;
  bool converged = false;
  /// Negative log-likelihood after each iteration (index 0 = initial pose).
  std::vector<double> objective_history;
};

inline constexpr double kMaskZOffset = 0.02;

/// Centroid of the mask shifted `z_offset` along the camera z-axis; identity rotation.
Pose mask_pose(const PointCloud& mask_points, const scene::CameraModel& camera, double z_offset = kMaskZOffset);

/// Rigid coherent point drift: the reference cloud is the GMM centroid set, moved by (R, t)
/// onto the observed cloud. Scale is fixed at 1.
RegistrationResult cpd_rigid(const PointCloud& reference, const PointCloud& observed, const Pose& init,
                             const CpdParams& params = {});

/// Registration of the object model onto a segmented cloud, initialised at the mask centroid.
RegistrationResult mesh_pose(const scene::ObjectModel& model, const PointCloud& mask_points,
                             const scene::CameraModel& camera, const CpdParams& params = {});

/// Seeded uniform subset of at most `max_points` points (order preserved).
PointCloud downsample(const PointCloud& cloud, int max_points, std::uint64_t seed);

namespace detail {
/// Rotation maximising tr(R^T A), with the determinant correction that keeps R proper.
Mat3 best_rotation(const Mat3& cross_covariance);
}  // namespace detail

}  // namespace teleop::registration
