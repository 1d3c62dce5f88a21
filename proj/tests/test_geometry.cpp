#include "support.hpp"

#include "teleop/geometry.hpp"

#include <doctest.h>

#include <limits>

using namespace teleop;
using teleop::testing::random_pose;

TEST_CASE("pose keeps a canonical unit quaternion") {
  const Pose p(Quat(-2.0, 0.0, 0.0, 2.0), Vec3(1, 2, 3));
  CHECK(p.rotation().norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.rotation().w() >= 0.0);
  CHECK_THROWS_AS(Pose(Quat::Identity(), Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0)), std::invalid_argument);
}

TEST_CASE("compose with inverse is identity") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng);
    const Pose e = p * p.inverse();
    CHECK(e.translation().norm() < 1e-9);
    CHECK(rotation_angle(e.rotation(), Quat::Identity()) < 1e-7);
    const Vec3 x(rng.normal(), rng.normal(), rng.normal());
    CHECK((p.inverse().apply(p.apply(x)) - x).norm() < 1e-9);
  }
}

TEST_CASE("composition applies right operand first") {
  const Pose a = Pose::from_translation(Vec3(1, 0, 0));
  const Pose b = Pose::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
  const Vec3 x(1, 0, 0);
  CHECK(((a * b).apply(x) - Vec3(1, 1, 0)).norm() < 1e-12);
  CHECK(((b * a).apply(x) - Vec3(0, 2, 0)).norm() < 1e-12);
}

TEST_CASE("array round trip") {
  Rng rng(4);
  const Pose p = random_pose(rng);
  const Pose q = Pose::from_array(p.to_array());
  CHECK(q.to_array() == p.to_array());
}

TEST_CASE("transform round trip on clouds") {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(rng.normal(), rng.normal(), rng.normal());
  const PointCloud cloud(pts);
  const Pose p = random_pose(rng);
  CHECK(teleop::testing::max_coord_diff(transform(p.inverse(), transform(p, cloud)), cloud) < 1e-9);
}

TEST_CASE("point cloud rejects empty and non-finite input") {
  CHECK_THROWS_AS(PointCloud({}), std::invalid_argument);
  CHECK_THROWS_AS(PointCloud({Vec3(0, std::numeric_limits<double>::infinity(), 0)}), std::invalid_argument);
}

TEST_CASE("rotation angle and exp map agree") {
  const Vec3 v(0.1, -0.2, 0.3);
  CHECK(rotation_angle(Quat::Identity(), quat_exp(v)) == doctest::Approx(v.norm()).epsilon(1e-12));
  CHECK(rotation_angle(quat_exp(Vec3(0, 0, std::numbers::pi)), Quat::Identity()) ==
        doctest::Approx(std::numbers::pi));
}

TEST_CASE("kd tree matches brute force nearest neighbour") {
  Rng rng(6);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  const KdTree tree(pts);
  for (int q = 0; q < 300; ++q) {
    const Vec3 x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    double best = std::numeric_limits<double>::infinity();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i] - x).squaredNorm();
      if (d < best) {
        best = d;
        idx = i;
      }
    }
    CHECK(tree.nearest_squared(x) == best);
    CHECK(tree.nearest_index(x) == idx);
  }
}

TEST_CASE("kd tree handles duplicates and a single point") {
  const std::vector<Vec3> one{Vec3(1, 1, 1)};
  CHECK(KdTree(one).nearest_squared(Vec3(1, 1, 2)) == doctest::Approx(1.0));
  const std::vector<Vec3> dup(20, Vec3(0.5, 0.5, 0.5));
  CHECK(KdTree(dup).nearest_squared(Vec3(0.5, 0.5, 0.5)) == 0.0);
}
