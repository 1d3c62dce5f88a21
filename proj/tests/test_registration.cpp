#include "support.hpp"

#include "teleop/errors.hpp"
#include "teleop/metrics.hpp"
#include "teleop/registration.hpp"

#include <doctest.h>

using namespace teleop;
using namespace teleop::registration;
using teleop::testing::random_pose;

namespace {

PointCloud cube_cloud(int n = 500, std::uint64_t seed = 1) {
  return scene::sample_surface_points(scene::PrimitiveShape::cube(0.06), n, seed);
}

// Rotation of a proper rigid transform between two poses, in degrees.
double angle_deg(const Pose& a, const Pose& b) { return metrics::pose_errors(a, b).rotation * 180.0 / std::numbers::pi; }

}  // namespace

TEST_CASE("mask pose is the centroid pushed along the camera axis") {
  scene::CameraModel cam;  // identity pose: camera z = world z
  CHECK((mask_pose(PointCloud({Vec3(1, 2, 3)}), cam, 0.0).translation() - Vec3(1, 2, 3)).norm() < 1e-12);
  const PointCloud sym({Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 1), Vec3(0, -1, -1)});
  CHECK((mask_pose(sym, cam).translation() - Vec3(0, 0, kMaskZOffset)).norm() < 1e-12);
  const auto tilted = scene::default_camera();
  const Pose p = mask_pose(sym, tilted);
  CHECK((p.translation() - kMaskZOffset * tilted.z_axis()).norm() < 1e-12);
  CHECK(p.rotation().isApprox(Quat::Identity()));
}

TEST_CASE("cpd params are validated") {
  CpdParams p;
  CHECK_NOTHROW(p.validate());
  p.outlier_weight = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.max_iterations = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.tolerance = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("identical clouds are a fixed point") {
  const auto c = cube_cloud();
  const auto r = cpd_rigid(c, c, Pose::identity());
  CHECK(r.pose.translation().norm() < 1e-6);
  CHECK(angle_deg(r.pose, Pose::identity()) < 1e-4);
  CHECK(r.iterations_used <= CpdParams{}.max_iterations);
}

TEST_CASE("recovers a known rigid motion") {
  const auto ref = cube_cloud();
  const Pose g = Pose::from_axis_angle(Vec3::UnitZ(), 15.0 * std::numbers::pi / 180.0, Vec3(0.05, 0, 0));
  const auto r = cpd_rigid(ref, transform(g, ref), Pose::identity());
  CHECK(r.converged);
  CHECK((r.pose.translation() - g.translation()).norm() < 1e-3);
  CHECK(angle_deg(r.pose, g) < 0.5);
}

TEST_CASE("tolerates uniform outliers") {
  const auto ref = cube_cloud();
  Rng rng(8);
  const Pose g = Pose::from_axis_angle(Vec3(1, 1, 0), 0.3, Vec3(0.02, -0.01, 0.03));
  auto pts = transform(g, ref).points();
  const int outliers = static_cast<int>(pts.size()) / 4;  // 20% of the final cloud
  for (int i = 0; i < outliers; ++i)
    pts.push_back(g.translation() + Vec3(rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06)));
  CpdParams params;
  params.outlier_weight = 0.2;
  const auto r = cpd_rigid(ref, PointCloud(pts), Pose::identity(), params);
  CHECK(metrics::add_s(ref, g, r.pose) < 0.005);
}

TEST_CASE("objective never increases") {
  Rng rng(9);
  const auto ref = cube_cloud(300, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose g = random_pose(rng, 0.5, 0.05);
    auto obs = transform(g, ref).points();
    for (auto& p : obs) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.001;
    const auto r = cpd_rigid(ref, PointCloud(obs), Pose::identity());
    REQUIRE(r.objective_history.size() >= 2);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
      CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9 * std::abs(r.objective_history[i - 1]) + 1e-9);
  }
}

TEST_CASE("registration is equivariant under rigid motion of the observation") {
  Rng rng(10);
  const auto ref = cube_cloud(300, 3);
  const Pose h = Pose::from_axis_angle(Vec3(0, 1, 1), 0.2, Vec3(0.01, 0.02, 0));
  const auto obs = transform(h, ref);
  for (int trial = 0; trial < 5; ++trial) {
    const Pose g = random_pose(rng, std::numbers::pi, 0.3);
    const auto base = cpd_rigid(ref, obs, Pose::identity());
    const auto moved = cpd_rigid(ref, transform(g, obs), g);
    CHECK(((g * base.pose).translation() - moved.pose.translation()).norm() < 1e-5);
    CHECK(angle_deg(g * base.pose, moved.pose) < 1e-3);
  }
}

TEST_CASE("best rotation corrects reflections") {
  // Cross-covariance of a mirrored cloud: unconstrained optimum would be a reflection.
  Rng rng(11);
  std::vector<Vec3> a;
  for (int i = 0; i < 50; ++i) a.emplace_back(rng.normal(), rng.normal(), rng.normal());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : a) cov += Vec3(-p.x(), p.y(), p.z()) * p.transpose();
  const Mat3 r = detail::best_rotation(cov);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-9);

  std::vector<Vec3> mirrored;
  for (const auto& p : a) mirrored.emplace_back(-p.x(), p.y(), p.z());
  const auto res = cpd_rigid(PointCloud(a), PointCloud(mirrored), Pose::identity());
  CHECK(res.pose.rotation_matrix().determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate clouds are rejected") {
  const PointCloud line({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)});
  const auto good = cube_cloud(100);
  CHECK_THROWS_AS(cpd_rigid(line, good, Pose::identity()), DegenerateGeometry);
  CHECK_THROWS_AS(cpd_rigid(good, line, Pose::identity()), DegenerateGeometry);
  const PointCloud same(std::vector<Vec3>(10, Vec3(1, 1, 1)));
  CHECK_THROWS_AS(cpd_rigid(good, same, Pose::identity()), DegenerateGeometry);
}

TEST_CASE("mesh pose on a clean full view") {
  const auto model = scene::make_object_model("cube", scene::PrimitiveShape::cube(0.06), 500, 4);
  scene::CameraModel cam = scene::default_camera(0.0, false);
  const auto r = mesh_pose(model, model.reference_points, cam);
  CHECK(metrics::add_s(model.reference_points, Pose::identity(), r.pose) < 1e-3);
}

TEST_CASE("mesh pose on a noisy half view") {
  const auto model = scene::make_object_model("cyl", scene::PrimitiveShape::cylinder(0.03, 0.09), 500, 4);
  scene::SceneConfig s;
  const Pose truth = Pose::from_axis_angle(Vec3(1, 0, 0), 30.0 * std::numbers::pi / 180.0, Vec3(0, 0.05, 0.05));
  s.objects.push_back({model, truth});
  s.camera = scene::default_camera(0.001, true);
  const auto obs = scene::render_observation(s, 5);
  const auto r = mesh_pose(model, obs.at(0).cloud, s.camera);
  CHECK(metrics::add_s(model.reference_points, truth, r.pose) < 0.02);
}

TEST_CASE("a wrong model does not explain the mask") {
  const auto sphere = scene::make_object_model("ball", scene::PrimitiveShape::sphere(0.02), 500, 4);
  const auto cube = scene::make_object_model("box", scene::PrimitiveShape::cube(0.12), 500, 5);
  const Pose truth = Pose::from_translation(Vec3(0, 0.05, 0.02));
  const auto mask = transform(truth, sphere.reference_points);
  const auto r = mesh_pose(cube, mask, scene::default_camera(0.0, false));
  CHECK(metrics::cloud_add_s(transform(r.pose, cube.reference_points), mask) > 0.02);
}

TEST_CASE("downsample keeps order and size bound") {
  const auto c = cube_cloud(500);
  const auto d = downsample(c, 100, 3);
  CHECK(d.size() == 100);
  CHECK(downsample(c, 100, 3) == d);
  CHECK(downsample(c, 1000, 3) == c);
  std::size_t j = 0;
  for (const auto& p : d) {
    while (j < c.size() && c[j] != p) ++j;
    CHECK(j < c.size());
  }
}
