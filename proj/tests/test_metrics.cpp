#include "oracles.hpp"
#include "support.hpp"

#include "teleop/metrics.hpp"
#include "teleop/scene.hpp"

#include <doctest.h>

using namespace teleop;
using namespace teleop::metrics;
using teleop::testing::random_pose;

TEST_CASE("add_s basics") {
  const auto model = scene::sample_surface_points(scene::PrimitiveShape::cube(0.06), 200, 1);
  Rng rng(2);
  const Pose p = random_pose(rng);
  CHECK(add_s(model, p, p) == 0.0);
  const PointCloud one({Vec3(0.1, 0.2, 0.3)});
  CHECK(add_s(one, Pose::identity(), Pose::from_translation(Vec3(0.03, 0, 0))) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK_THROWS_AS(PointCloud({}), std::invalid_argument);
}

TEST_CASE("add_s equals the brute-force definition") {
  Rng rng(12);
  const auto model = scene::sample_surface_points(scene::PrimitiveShape::cube(0.06), 200, 4);
  for (int i = 0; i < 20; ++i) {
    const Pose gt = random_pose(rng, std::numbers::pi, 0.2);
    const Pose est = random_pose(rng, std::numbers::pi, 0.2);
    CHECK(std::abs(add_s(model, gt, est) - oracle::add_s(model.points(), gt, est)) < 1e-12);
  }
}

TEST_CASE("add_s is left invariant and bounded") {
  Rng rng(13);
  const auto model = scene::sample_surface_points(scene::PrimitiveShape::cylinder(0.03, 0.09), 150, 4);
  for (int i = 0; i < 10; ++i) {
    const Pose gt = random_pose(rng, 1.0, 0.1), est = random_pose(rng, 1.0, 0.1), g = random_pose(rng);
    CHECK(add_s(model, g * gt, g * est) == doctest::Approx(add_s(model, gt, est)).epsilon(1e-9));
    const Pose shifted(gt.rotation(), gt.translation() + Vec3(0.01, -0.02, 0.005));
    CHECK(add_s(model, gt, shifted) <= (shifted.translation() - gt.translation()).norm() + 1e-12);
  }
}

TEST_CASE("add_s ignores rotation of a dense sphere") {
  const auto model = scene::sample_surface_points(scene::PrimitiveShape::sphere(0.05), 2000, 3);
  Rng rng(14);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 8; ++i) {
    const Pose est = Pose::from_axis_angle(teleop::testing::random_unit(rng), rng.uniform(0, 3.0));
    const double v = add_s(model, Pose::identity(), est);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Only the sampling gap remains: about half the mean point spacing sqrt(area / n).
  const double spacing = std::sqrt(4.0 * std::numbers::pi * 0.05 * 0.05 / 2000.0);
  CHECK(hi < 0.6 * spacing);
  CHECK(hi - lo < 0.1 * spacing);
  // A cube of the same size rotated by the same angles is penalised far beyond the gap.
  const auto cube = scene::sample_surface_points(scene::PrimitiveShape::cube(0.1), 2000, 3);
  CHECK(add_s(cube, Pose::identity(), Pose::from_axis_angle(Vec3(1, 2, 3), 0.5)) > 1.5 * spacing);
}

TEST_CASE("cloud_add_s matches brute force") {
  Rng rng(15);
  for (int k = 0; k < 10; ++k) {
    std::vector<Vec3> a, b;
    for (int i = 0; i < 50; ++i) a.emplace_back(rng.normal(), rng.normal(), rng.normal());
    for (int i = 0; i < 50; ++i) b.emplace_back(rng.normal(), rng.normal(), rng.normal());
    CHECK(std::abs(cloud_add_s(PointCloud(a), PointCloud(b)) - oracle::cloud_add_s(a, b)) < 1e-12);
    CHECK(cloud_add_s(PointCloud(a), PointCloud(a)) == 0.0);
  }
  CHECK(cloud_add_s(PointCloud({Vec3::Zero()}), PointCloud({Vec3(0, 0.2, 0)})) == doctest::Approx(0.2));
}

TEST_CASE("accuracy curve edge cases") {
  const std::vector<double> zeros(5, 0.0);
  const auto perfect = accuracy_curve(zeros);
  CHECK(perfect.auc == doctest::Approx(1.0));
  for (double a : perfect.accuracies) CHECK(a == 1.0);
  const std::vector<double> far{0.2, 0.5};
  const auto none = accuracy_curve(far);
  CHECK(none.auc == 0.0);
  for (double a : none.accuracies) CHECK(a == 0.0);
  CHECK_THROWS_AS(accuracy_curve(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_curve(zeros, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_curve(zeros, 0.0), std::invalid_argument);
}

TEST_CASE("single error at half range gives half the area") {
  const std::vector<double> e{0.05};
  CHECK(accuracy_curve(e, 0.1, 1001).auc == doctest::Approx(0.5).epsilon(0.001 / 0.5));
  CHECK(accuracy_curve(e).auc == doctest::Approx(0.5).epsilon(0.001 / 0.5));
}

TEST_CASE("curve is monotone and converges to the step integral") {
  Rng rng(16);
  std::vector<double> errors;
  for (int i = 0; i < 300; ++i) errors.push_back(std::abs(rng.normal(0.0, 0.04)));
  const auto c = accuracy_curve(errors);
  REQUIRE(c.thresholds.size() == c.accuracies.size());
  for (std::size_t i = 1; i < c.accuracies.size(); ++i) {
    CHECK(c.thresholds[i] > c.thresholds[i - 1]);
    CHECK(c.accuracies[i] >= c.accuracies[i - 1]);
  }
  CHECK(c.auc == doctest::Approx(oracle::step_auc(errors, 0.1)).epsilon(2e-3));
}

TEST_CASE("pct_below is inclusive") {
  CHECK(pct_below(std::vector<double>{0.01, 0.03}, 0.02) == 0.5);
  CHECK(pct_below(std::vector<double>{0.0, 0.0}) == 1.0);
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 100.0);
  CHECK(pct_below(grid, 0.02) == doctest::Approx(3.0 / 11.0));
  CHECK_THROWS_AS(pct_below(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("pose errors") {
  const Pose a = Pose::from_translation(Vec3(1, 2, 3));
  CHECK(pose_errors(a, a).translation == 0.0);
  CHECK(pose_errors(a, a).rotation == 0.0);
  const Pose b = Pose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2, a.translation());
  CHECK(pose_errors(a, b).translation == 0.0);
  CHECK(pose_errors(a, b).rotation == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const Pose g = random_pose(rng), e = random_pose(rng);
    CHECK(std::abs(pose_errors(g, e).rotation - oracle::quat_angle(g.rotation(), e.rotation())) < 1e-9);
  }
}
