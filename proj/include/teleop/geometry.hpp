#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace teleop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform x -> R x + t. The rotation is kept as a unit quaternion with
/// non-negative scalar part, so equal rotations compare equal.
class Pose {
 public:
  Pose() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Quat& rotation, const Vec3& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Quat::Identity(), t}; }
  /// Rotation of `angle` radians about `axis` (need not be normalized), then translation.
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());
  /// qw qx qy qz tx ty tz
  static Pose from_array(const std::array<double, 7>& v);

  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  std::array<double, 7> to_array() const;

  Vec3 apply(const Vec3& x) const { return rotation_ * x + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  /// (this ∘ other)(x) = this(other(x))
  Pose compose(const Pose& other) const;
  Pose inverse() const;

  Pose operator*(const Pose& other) const { return compose(other); }

 private:
  Quat rotation_;
  Vec3 translation_;
};

/// Geodesic angle between two rotations, in [0, pi].
double rotation_angle(const Quat& a, const Quat& b);

/// Unit quaternion for the rotation vector `v` (axis * angle).
Quat quat_exp(const Vec3& v);

/// Non-empty ordered set of finite 3D points.
class PointCloud {
 public:
  explicit PointCloud(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  Vec3 centroid() const;

  bool operator==(const PointCloud& other) const { return points_ == other.points_; }

 private:
  std::vector<Vec3> points_;
};

PointCloud transform(const Pose& pose, const PointCloud& cloud);

/// Static 3-d tree for nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Squared distance from `query` to the closest stored point.
  double nearest_squared(const Vec3& query) const;
  /// Index into the construction span of the closest stored point.
  std::size_t nearest_index(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int point = -1;  // index into points_
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& order, int begin, int end);
  void search(int node, const Vec3& q, double& best, int& best_index) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace teleop
