#pragma once

#include "teleop/geometry.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace teleop::scene {

enum class GraspDirection { Top = 0, Right = 1 };
inline constexpr int kNumDirections = 2;
inline constexpr int kDefaultNumObjects = 3;

const char* to_string(GraspDirection d);
GraspDirection parse_direction(const std::string& s);

enum class PrimitiveKind { Cube, Sphere, Cylinder, Bowl };

const char* to_string(PrimitiveKind k);
PrimitiveKind parse_kind(const std::string& s);

/// Parametric surface standing in for a mesh, centred at the origin of its frame.
///   Cube:     size = edge length
///   Sphere:   size = radius
///   Cylinder: size = radius, height = length along z
///   Bowl:     size = mid-wall radius, height = wall thickness; open hemisphere (z <= 0)
///             with a rounded rim at z = 0
struct PrimitiveShape {
  PrimitiveKind kind = PrimitiveKind::Cube;
  double size = 1.0;
  double height = 0.0;

  static PrimitiveShape cube(double edge) { return {PrimitiveKind::Cube, edge, 0.0}; }
  static PrimitiveShape sphere(double radius) { return {PrimitiveKind::Sphere, radius, 0.0}; }
  static PrimitiveShape cylinder(double radius, double height) { return {PrimitiveKind::Cylinder, radius, height}; }
  static PrimitiveShape bowl(double radius, double wall) { return {PrimitiveKind::Bowl, radius, wall}; }

  /// Half extent along +z, used to place grasp points.
  double top_extent() const;
  /// Half extent along +x.
  double side_extent() const;
};

struct SurfaceSample {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // outward unit normals
};

/// Area-uniform samples on the primitive surface, with normals.
SurfaceSample sample_surface(const PrimitiveShape& shape, int count, std::uint64_t seed);
PointCloud sample_surface_points(const PrimitiveShape& shape, int count, std::uint64_t seed);

struct ObjectModel {
  std::string label;
  PrimitiveShape shape;
  PointCloud reference_points;
  std::vector<Vec3> reference_normals;
  std::map<GraspDirection, Pose> grasp_offsets;
  double bounding_radius = 0.0;
  std::uint64_t sample_seed = 0;  // regenerates reference_points from `shape`
};

inline constexpr int kDefaultModelPoints = 500;

ObjectModel make_object_model(std::string label, const PrimitiveShape& shape,
                              int count = kDefaultModelPoints, std::uint64_t seed = 0);

/// Camera z-axis is the viewing direction.
struct CameraModel {
  Pose pose;
  double noise_sigma = 0.0;
  bool culling = true;

  Vec3 position() const { return pose.translation(); }
  Vec3 z_axis() const { return pose.rotate(Vec3::UnitZ()); }
};

/// Camera at `eye` with z pointing at `target`; x stays horizontal where possible.
Pose look_at(const Vec3& eye, const Vec3& target);

struct SceneObject {
  ObjectModel model;
  Pose pose;
};

struct SceneConfig {
  std::vector<SceneObject> objects;
  CameraModel camera;
  std::uint64_t seed = 0;

  std::size_t num_objects() const { return objects.size(); }
  std::vector<std::string> labels() const;
  std::vector<Vec3> object_positions() const;
  /// Throws InvalidArgument on overlapping bounding spheres or an empty scene.
  void validate() const;
};

/// World point of the grasp for `direction` on object `index`.
Pose grasp_pose(const SceneObject& object, GraspDirection direction);

struct ObservedObject {
  int object_index;
  PointCloud cloud;
};
using Observation = std::vector<ObservedObject>;

/// Visible, noisy per-object clouds. Grouping by object is the ground-truth mask.
Observation render_observation(const SceneConfig& scene, std::uint64_t seed);

struct Detection {
  std::string label;
  PointCloud cloud;
  int object_index;  // ground truth, for evaluation only
};

/// Stand-in for an instance segmenter: drops objects with probability 1 - detection_rate and
/// relabels kept ones to a uniformly chosen other scene label with probability label_error_rate.
std::vector<Detection> segment_oracle(const SceneConfig& scene, const Observation& observation,
                                      double detection_rate, double label_error_rate, std::uint64_t seed);

/// Detection and label error rates of the segmenter this oracle replaces.
inline constexpr double kReferenceDetectionRate = 0.9273;
inline constexpr double kReferenceLabelErrorRate = 0.0016;

/// Cube, sphere and cylinder on a table in front of the camera.
SceneConfig tabletop_scene(std::uint64_t seed = 1);
/// Cube, sphere, cylinder and bowl; the pose-estimation benchmark layout.
SceneConfig benchmark_scene(std::uint64_t seed = 1);
CameraModel default_camera(double noise_sigma = 0.001, bool culling = true);

}  // namespace teleop::scene
