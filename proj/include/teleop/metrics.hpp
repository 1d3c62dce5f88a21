#pragma once

#include "teleop/geometry.hpp"

#include <span>
#include <string>
#include <vector>

namespace teleop::metrics {

struct ErrorSample {
  std::string object_label;
  double add_s = 0.0;
  double translation_error = 0.0;
  double rotation_error = 0.0;
};

struct AccuracyCurve {
  std::vector<double> thresholds;
  std::vector<double> accuracies;
  double auc = 0.0;
};

inline constexpr double kAucMaxThreshold = 0.1;
inline constexpr int kAucSteps = 1000;
inline constexpr double kGraspTolerance = 0.02;

/// Mean over model points x1 of min over x2 of |(R x1 + t) - (R^ x2 + t^)|.
double add_s(const PointCloud& model, const Pose& gt, const Pose& est);

/// Symmetrised mean nearest-neighbour distance between two clouds.
double cloud_add_s(const PointCloud& a, const PointCloud& b);

/// accuracies[i] = fraction of errors <= thresholds[i]; thresholds evenly span [0, max_threshold].
/// AUC is the trapezoid integral divided by max_threshold. Errors above the range land in no bin.
AccuracyCurve accuracy_curve(std::span<const double> errors, double max_threshold = kAucMaxThreshold,
                             int steps = kAucSteps);

/// Fraction of errors <= threshold (inclusive).
double pct_below(std::span<const double> errors, double threshold = kGraspTolerance);

struct PoseError {
  double translation = 0.0;
  double rotation = 0.0;  // radians, [0, pi]
};

PoseError pose_errors(const Pose& gt, const Pose& est);

ErrorSample make_error_sample(std::string label, const PointCloud& model, const Pose& gt, const Pose& est);

}  // namespace teleop::metrics
