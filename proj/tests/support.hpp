#pragma once

#include "teleop/geometry.hpp"
#include "teleop/rng.hpp"

#include <numbers>

namespace teleop::testing {

inline Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-9) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

inline Pose random_pose(Rng& rng, double max_angle = std::numbers::pi, double max_trans = 1.0) {
  const Vec3 t(rng.uniform(-max_trans, max_trans), rng.uniform(-max_trans, max_trans),
               rng.uniform(-max_trans, max_trans));
  return Pose::from_axis_angle(random_unit(rng), rng.uniform(0.0, max_angle), t);
}

inline double max_coord_diff(const PointCloud& a, const PointCloud& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace teleop::testing
