#include "teleop/scene.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace teleop::scene {

using std::numbers::pi;

const char* to_string(GraspDirection d) { return d == GraspDirection::Top ? "top" : "right"; }

GraspDirection parse_direction(const std::string& s) {
  if (s == "top" || s == "Top" || s == "0") return GraspDirection::Top;
  if (s == "right" || s == "Right" || s == "1") return GraspDirection::Right;
  throw InvalidArgument("unknown grasp direction '" + s + "'");
}

const char* to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Cube: return "cube";
    case PrimitiveKind::Sphere: return "sphere";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Bowl: return "bowl";
  }
  return "?";
}

PrimitiveKind parse_kind(const std::string& s) {
  if (s == "cube") return PrimitiveKind::Cube;
  if (s == "sphere") return PrimitiveKind::Sphere;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "bowl") return PrimitiveKind::Bowl;
  throw InvalidArgument("unknown primitive kind '" + s + "'");
}

double PrimitiveShape::top_extent() const {
  switch (kind) {
    case PrimitiveKind::Cube: return 0.5 * size;
    case PrimitiveKind::Sphere: return size;
    case PrimitiveKind::Cylinder: return 0.5 * height;
    case PrimitiveKind::Bowl: return 0.5 * height;
  }
  return size;
}

double PrimitiveShape::side_extent() const {
  switch (kind) {
    case PrimitiveKind::Cube: return 0.5 * size;
    case PrimitiveKind::Sphere: return size;
    case PrimitiveKind::Cylinder: return size;
    case PrimitiveKind::Bowl: return size + 0.5 * height;
  }
  return size;
}

namespace {

Vec3 unit_vector(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.squaredNorm() < 1e-20);
  return v.normalized();
}

void sample_cube(double edge, int count, Rng& rng, SurfaceSample& out) {
  const double h = 0.5 * edge;
  for (int i = 0; i < count; ++i) {
    const int face = static_cast<int>(rng.below(6));
    const int axis = face / 2;
    const double sign = (face % 2 == 0) ? 1.0 : -1.0;
    Vec3 p(rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h));
    p[axis] = sign * h;
    Vec3 n = Vec3::Zero();
    n[axis] = sign;
    out.points.push_back(p);
    out.normals.push_back(n);
  }
}

void sample_sphere(double radius, int count, Rng& rng, SurfaceSample& out) {
  for (int i = 0; i < count; ++i) {
    const Vec3 n = unit_vector(rng);
    out.points.push_back(radius * n);
    out.normals.push_back(n);
  }
}

void sample_cylinder(double radius, double height, int count, Rng& rng, SurfaceSample& out) {
  const double side = 2.0 * pi * radius * height;
  const double cap = pi * radius * radius;
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform() * (side + 2.0 * cap);
    if (u < side) {
      const double a = rng.uniform(0.0, 2.0 * pi);
      const Vec3 n(std::cos(a), std::sin(a), 0.0);
      out.points.push_back(Vec3(radius * n.x(), radius * n.y(), rng.uniform(-0.5 * height, 0.5 * height)));
      out.normals.push_back(n);
    } else {
      const double sign = (u < side + cap) ? 1.0 : -1.0;
      const double r = radius * std::sqrt(rng.uniform());
      const double a = rng.uniform(0.0, 2.0 * pi);
      out.points.push_back(Vec3(r * std::cos(a), r * std::sin(a), sign * 0.5 * height));
      out.normals.push_back(Vec3(0.0, 0.0, sign));
    }
  }
}

// Lower hemisphere of `radius`; `sign` = +1 for outward normals, -1 for inward.
void hemisphere_point(double radius, double sign, Rng& rng, SurfaceSample& out) {
  Vec3 n = unit_vector(rng);
  n.z() = -std::abs(n.z());
  out.points.push_back(radius * n);
  out.normals.push_back(sign * n);
}

void sample_bowl(double radius, double wall, int count, Rng& rng, SurfaceSample& out) {
  const double r = 0.5 * wall;
  const double outer = radius + r;
  const double inner = radius - r;
  const double a_outer = 2.0 * pi * outer * outer;
  const double a_inner = 2.0 * pi * inner * inner;
  const double a_rim = 2.0 * pi * pi * radius * r;  // upper half torus
  const double total = a_outer + a_inner + a_rim;
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    if (u < a_outer) {
      hemisphere_point(outer, 1.0, rng, out);
    } else if (u < a_outer + a_inner) {
      hemisphere_point(inner, -1.0, rng, out);
    } else {
      // Area element of the torus is proportional to (R + r cos v).
      double v;
      do {
        v = rng.uniform(0.0, pi);
      } while (rng.uniform() * (radius + r) > radius + r * std::cos(v));
      const double a = rng.uniform(0.0, 2.0 * pi);
      const Vec3 radial(std::cos(a), std::sin(a), 0.0);
      const Vec3 n = std::cos(v) * radial + std::sin(v) * Vec3::UnitZ();
      out.points.push_back(radius * radial + r * n);
      out.normals.push_back(n);
    }
  }
}

}  // namespace

SurfaceSample sample_surface(const PrimitiveShape& shape, int count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("sample count must be positive");
  if (!(shape.size > 0.0)) throw InvalidArgument("primitive size must be positive");
  Rng rng(seed, "surface");
  SurfaceSample out;
  out.points.reserve(count);
  out.normals.reserve(count);
  switch (shape.kind) {
    case PrimitiveKind::Cube: sample_cube(shape.size, count, rng, out); break;
    case PrimitiveKind::Sphere: sample_sphere(shape.size, count, rng, out); break;
    case PrimitiveKind::Cylinder:
      if (!(shape.height > 0.0)) throw InvalidArgument("cylinder height must be positive");
      sample_cylinder(shape.size, shape.height, count, rng, out);
      break;
    case PrimitiveKind::Bowl:
      if (!(shape.height > 0.0) || shape.height >= 2.0 * shape.size)
        throw InvalidArgument("bowl wall must be positive and thinner than the bowl");
      sample_bowl(shape.size, shape.height, count, rng, out);
      break;
  }
  return out;
}

PointCloud sample_surface_points(const PrimitiveShape& shape, int count, std::uint64_t seed) {
  return PointCloud(sample_surface(shape, count, seed).points);
}

ObjectModel make_object_model(std::string label, const PrimitiveShape& shape, int count, std::uint64_t seed) {
  auto sample = sample_surface(shape, count, seed);
  double radius = 0.0;
  for (const auto& p : sample.points) radius = std::max(radius, p.norm());
  std::map<GraspDirection, Pose> offsets;
  // Palm orientation is a rotation about y applied to a downward-facing palm.
  offsets[GraspDirection::Top] = Pose::from_translation(Vec3(0.0, 0.0, shape.top_extent()));
  offsets[GraspDirection::Right] =
      Pose::from_axis_angle(Vec3::UnitY(), 0.5 * pi, Vec3(shape.side_extent(), 0.0, 0.0));
  return ObjectModel{std::move(label), shape, PointCloud(std::move(sample.points)), std::move(sample.normals),
                     std::move(offsets), radius, seed};
}

Pose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {Quat(r), eye};
}

std::vector<std::string> SceneConfig::labels() const {
  std::vector<std::string> out;
  for (const auto& o : objects) out.push_back(o.model.label);
  return out;
}

std::vector<Vec3> SceneConfig::object_positions() const {
  std::vector<Vec3> out;
  for (const auto& o : objects) out.push_back(o.pose.translation());
  return out;
}

void SceneConfig::validate() const {
  if (objects.empty()) throw InvalidArgument("scene has no objects");
  if (camera.noise_sigma < 0.0) throw InvalidArgument("camera noise_sigma must be non-negative");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const double d = (objects[i].pose.translation() - objects[j].pose.translation()).norm();
      if (d < objects[i].model.bounding_radius + objects[j].model.bounding_radius)
        throw InvalidArgument("objects '" + objects[i].model.label + "' and '" + objects[j].model.label +
                              "' overlap");
    }
  }
}

Pose grasp_pose(const SceneObject& object, GraspDirection direction) {
  return object.pose * object.model.grasp_offsets.at(direction);
}

Observation render_observation(const SceneConfig& scene, std::uint64_t seed) {
  if (scene.objects.empty()) throw InvalidArgument("cannot render an empty scene");
  const Vec3 eye = scene.camera.position();
  Observation out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& obj = scene.objects[i];
    Rng rng(seed, "render", i);
    const Mat3 r = obj.pose.rotation_matrix();
    std::vector<Vec3> pts;
    pts.reserve(obj.model.reference_points.size());
    for (std::size_t k = 0; k < obj.model.reference_points.size(); ++k) {
      const Vec3 p = r * obj.model.reference_points[k] + obj.pose.translation();
      if (scene.camera.culling) {
        const Vec3 n = r * obj.model.reference_normals[k];
        if (n.dot(eye - p) <= 0.0) continue;
      }
      pts.push_back(p);
    }
    if (scene.camera.noise_sigma > 0.0) {
      for (auto& p : pts) {
        p += Vec3(rng.normal(), rng.normal(), rng.normal()) * scene.camera.noise_sigma;
      }
    }
    if (pts.empty()) continue;
    out.push_back({static_cast<int>(i), PointCloud(std::move(pts))});
  }
  return out;
}

std::vector<Detection> segment_oracle(const SceneConfig& scene, const Observation& observation,
                                      double detection_rate, double label_error_rate, std::uint64_t seed) {
  if (!(detection_rate >= 0.0 && detection_rate <= 1.0) || !(label_error_rate >= 0.0 && label_error_rate <= 1.0))
    throw InvalidArgument("segmentation rates must lie in [0, 1]");
  const auto labels = scene.labels();
  std::vector<Detection> out;
  for (const auto& obs : observation) {
    Rng rng(seed, "segment", static_cast<std::uint64_t>(obs.object_index));
    if (!rng.bernoulli(detection_rate)) continue;
    std::string label = labels.at(obs.object_index);
    if (rng.bernoulli(label_error_rate)) {
      std::vector<std::string> others;
      for (const auto& l : labels) {
        if (l != label && std::find(others.begin(), others.end(), l) == others.end()) others.push_back(l);
      }
      if (!others.empty()) label = others[rng.below(others.size())];
    }
    out.push_back({std::move(label), obs.cloud, obs.object_index});
  }
  return out;
}

CameraModel default_camera(double noise_sigma, bool culling) {
  return {look_at(Vec3(0.0, -0.55, 0.55), Vec3(0.0, 0.06, 0.03)), noise_sigma, culling};
}

SceneConfig tabletop_scene(std::uint64_t seed) {
  SceneConfig s;
  s.seed = seed;
  s.camera = default_camera();
  s.objects.push_back({make_object_model("cube", PrimitiveShape::cube(0.06), kDefaultModelPoints, 11),
                       Pose::from_translation(Vec3(-0.16, 0.04, 0.03))});
  s.objects.push_back({make_object_model("sphere", PrimitiveShape::sphere(0.035), kDefaultModelPoints, 12),
                       Pose::from_translation(Vec3(0.0, 0.12, 0.035))});
  s.objects.push_back({make_object_model("cylinder", PrimitiveShape::cylinder(0.03, 0.09), kDefaultModelPoints, 13),
                       Pose::from_translation(Vec3(0.16, 0.04, 0.045))});
  return s;
}

SceneConfig benchmark_scene(std::uint64_t seed) {
  SceneConfig s = tabletop_scene(seed);
  s.objects[0].pose = Pose::from_translation(Vec3(-0.2, 0.0, 0.03));
  s.objects[1].pose = Pose::from_translation(Vec3(-0.07, 0.12, 0.035));
  s.objects[2].pose = Pose::from_translation(Vec3(0.07, 0.0, 0.045));
  s.objects.push_back({make_object_model("bowl", PrimitiveShape::bowl(0.05, 0.008), kDefaultModelPoints, 14),
                       Pose::from_translation(Vec3(0.2, 0.12, 0.054))});
  return s;
}

}  // namespace teleop::scene
