#include "teleop/metrics.hpp"

#include "teleop/errors.hpp"

#include <algorithm>
#include <cmath>

namespace teleop::metrics {

double add_s(const PointCloud& model, const Pose& gt, const Pose& est) {
  const PointCloud est_cloud = transform(est, model);
  const KdTree tree(est_cloud.points());
  const Mat3 r = gt.rotation_matrix();
  double sum = 0.0;
  for (const auto& x : model) sum += std::sqrt(tree.nearest_squared(r * x + gt.translation()));
  return sum / static_cast<double>(model.size());
}

namespace {

double mean_nearest(const PointCloud& from, const KdTree& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += std::sqrt(to.nearest_squared(p));
  return sum / static_cast<double>(from.size());
}

}  // namespace

double cloud_add_s(const PointCloud& a, const PointCloud& b) {
  const KdTree ta(a.points());
  const KdTree tb(b.points());
  return 0.5 * (mean_nearest(a, tb) + mean_nearest(b, ta));
}

AccuracyCurve accuracy_curve(std::span<const double> errors, double max_threshold, int steps) {
  if (errors.empty()) throw InvalidArgument("accuracy curve needs at least one error");
  if (steps < 2) throw InvalidArgument("accuracy curve needs at least two thresholds");
  if (!(max_threshold > 0.0)) throw InvalidArgument("max_threshold must be positive");

  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  AccuracyCurve curve;
  curve.thresholds.resize(steps);
  curve.accuracies.resize(steps);
  for (int i = 0; i < steps; ++i) {
    const double th = max_threshold * static_cast<double>(i) / static_cast<double>(steps - 1);
    curve.thresholds[i] = th;
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), th) - sorted.begin();
    curve.accuracies[i] = static_cast<double>(count) / n;
  }
  double area = 0.0;
  for (int i = 1; i < steps; ++i) {
    area += 0.5 * (curve.accuracies[i] + curve.accuracies[i - 1]) * (curve.thresholds[i] - curve.thresholds[i - 1]);
  }
  curve.auc = std::clamp(area / max_threshold, 0.0, 1.0);
  return curve;
}

double pct_below(std::span<const double> errors, double threshold) {
  if (errors.empty()) throw InvalidArgument("pct_below needs at least one error");
  const auto count = std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= threshold; });
  return static_cast<double>(count) / static_cast<double>(errors.size());
}

PoseError pose_errors(const Pose& gt, const Pose& est) {
  return {(gt.translation() - est.translation()).norm(), rotation_angle(gt.rotation(), est.rotation())};
}

ErrorSample make_error_sample(std::string label, const PointCloud& model, const Pose& gt, const Pose& est) {
  const auto pe = pose_errors(gt, est);
  return {std::move(label), add_s(model, gt, est), pe.translation, pe.rotation};
}

}  // namespace teleop::metrics
