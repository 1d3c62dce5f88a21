#include "teleop/geometry.hpp"

#include "teleop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace teleop {

namespace {

Quat canonical(Quat q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("pose rotation must be a finite non-zero quaternion");
  // Leave unit quaternions bit-exact so that serialised poses read back unchanged.
  if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) q.coeffs() /= n;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

Pose::Pose(const Quat& rotation, const Vec3& translation)
    : rotation_(canonical(rotation)), translation_(translation) {
  if (!translation_.allFinite()) throw InvalidArgument("pose translation must be finite");
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
  if (axis.norm() == 0.0) return from_translation(t);
  return {Quat(Eigen::AngleAxisd(angle, axis.normalized())), t};
}

Pose Pose::from_array(const std::array<double, 7>& v) {
  return {Quat(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])};
}

std::array<double, 7> Pose::to_array() const {
  return {rotation_.w(), rotation_.x(), rotation_.y(), rotation_.z(),
          translation_.x(), translation_.y(), translation_.z()};
}

Pose Pose::compose(const Pose& other) const {
  return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

Pose Pose::inverse() const {
  const Quat inv = rotation_.conjugate();
  return {inv, -(inv * translation_)};
}

double rotation_angle(const Quat& a, const Quat& b) {
  const double d = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return 2.0 * std::acos(d);
}

Quat quat_exp(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-15) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, v / angle));
}

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("point cloud must contain at least one point");
  for (const auto& p : points_) {
    if (!p.allFinite()) throw InvalidArgument("point cloud coordinates must be finite");
  }
}

Vec3 PointCloud::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& p : points_) c += p;
  return c / static_cast<double>(points_.size());
}

PointCloud transform(const Pose& pose, const PointCloud& cloud) {
  const Mat3 r = pose.rotation_matrix();
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(r * p + pose.translation());
  return PointCloud(std::move(out));
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) throw InvalidArgument("k-d tree needs at least one point");
  std::vector<int> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, static_cast<int>(order.size()));
}

int KdTree::build(std::vector<int>& order, int begin, int end) {
  if (begin >= end) return -1;
  Vec3 lo = points_[order[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order[i]]);
    hi = hi.cwiseMax(points_[order[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({order[mid], axis, -1, -1});
  const int left = build(order, begin, mid);
  const int right = build(order, mid + 1, end);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void KdTree::search(int node, const Vec3& q, double& best, int& best_index) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best || (d2 == best && n.point < best_index)) {
    best = d2;
    best_index = n.point;
  }
  const double diff = q[n.axis] - p[n.axis];
  search(diff < 0.0 ? n.left : n.right, q, best, best_index);
  if (diff * diff <= best) search(diff < 0.0 ? n.right : n.left, q, best, best_index);
}

double KdTree::nearest_squared(const Vec3& query) const {
  double best = std::numeric_limits<double>::infinity();
  int index = -1;
  search(root_, query, best, index);
  return best;
}

std::size_t KdTree::nearest_index(const Vec3& query) const {
  double best = std::numeric_limits<double>::infinity();
  int index = -1;
  search(root_, query, best, index);
  return static_cast<std::size_t>(index);
}

}  // namespace teleop
