#include "gradcheck.hpp"
#include "support.hpp"

#include "teleop/errors.hpp"
#include "teleop/intent.hpp"

#include <doctest.h>

#include <sstream>

using namespace teleop;
using namespace teleop::intent;

namespace {

LabeledTrajectory line_trajectory(int target, GraspDirection dir, const std::vector<Vec3>& objects) {
  LabeledTrajectory t;
  t.id = "toy";
  t.target_object = target;
  t.grasp_direction = dir;
  t.rate = 10;
  t.duration = 1.0;
  t.object_positions = objects;
  for (int i = 0; i <= 10; ++i) {
    HandState h;
    h.timestamp = i * 0.1;
    h.position = objects[target] * (i / 10.0);
    h.y_rotation = dir == GraspDirection::Top ? 0.0 : 1.5;
    t.states.push_back(h);
  }
  return t;
}

const std::vector<Vec3> kObjects{Vec3(-0.2, 0.1, 0), Vec3(0, 0.2, 0), Vec3(0.2, 0.1, 0)};

}  // namespace

TEST_CASE("feature order is fixed") {
  HandState h;
  h.position = Vec3(0.2, 0.0, 0.4);
  h.direction = Vec3(0, 0, 1);
  h.palm_normal = Vec3(0, -1, 0);
  h.y_rotation = 0.3;
  const std::vector<Vec3> objs{Vec3(0.2, 0, 0.4), Vec3(1.2, 0, 0.4), Vec3(0.2, 0, 2.4)};
  const FeatureVector f = extract_features(h, objs);
  const FeatureVector expected{0.0, 1.0, 2.0, 0.2, 0.0, 0.0, -1.0, 0.3};
  CHECK(f == expected);

  HandState origin;
  const auto unit = extract_features(origin, {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)});
  CHECK(unit[0] == 1.0);
  CHECK(unit[1] == 1.0);
  CHECK(unit[2] == 1.0);
  CHECK_THROWS_AS(extract_features(h, {Vec3::Zero(), Vec3::Zero()}), std::invalid_argument);
}

TEST_CASE("zero network scores") {
  const auto p = zero_mlp(MlpShape{});
  const auto s = mlp_forward(p, FeatureVector{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(s.object.size() == 3);
  CHECK(s.direction.size() == 2);
  CHECK(s.object.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.direction.cwiseAbs().maxCoeff() == 0.0);
  const auto pred = predict(p, FeatureVector{});
  CHECK(pred.target.object == 0);
  CHECK(pred.target.direction == GraspDirection::Top);
}

TEST_CASE("forward pass is deterministic and rejects non-finite input") {
  const auto p = init_mlp(MlpShape{}, 4);
  const FeatureVector f{0.1, 0.2, 0.3, -0.1, 0.5, -0.2, 0.4, 0.3};
  CHECK(mlp_forward(p, f).object == mlp_forward(p, f).object);
  FeatureVector bad = f;
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mlp_forward(p, bad), std::invalid_argument);
}

TEST_CASE("softmax sums to one and argmax rules") {
  Rng rng(5);
  const auto p = init_mlp(MlpShape{}, 5);
  for (int i = 0; i < 20; ++i) {
    FeatureVector f;
    for (auto& v : f) v = rng.normal();
    const auto s = mlp_forward(p, f);
    CHECK(softmax(s.object).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(softmax(s.direction).sum() == doctest::Approx(1.0).epsilon(1e-9));
    const Eigen::VectorXd shifted = s.object.array() + 17.0;
    CHECK(argmax(shifted) == argmax(s.object));
  }
  Eigen::VectorXd tie(3);
  tie << 1.0, 2.0, 2.0;
  CHECK(argmax(tie) == 1);
  CHECK(argmax(tie, {false, true, false}) == 2);
  CHECK(argmax(tie, {true, true, true}) == 1);
  Eigen::VectorXd big(2);
  big << 1000.0, 0.0;
  CHECK(softmax(big)[0] == doctest::Approx(1.0));
}

TEST_CASE("analytic gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) CHECK(teleop::testing::gradient_check(seed) < 1e-4);
}

TEST_CASE("training fits a separable toy problem and is reproducible") {
  const std::vector<LabeledTrajectory> data{line_trajectory(0, GraspDirection::Top, kObjects),
                                            line_trajectory(2, GraspDirection::Right, kObjects)};
  TrainHyper hyper;
  hyper.epochs = 200;
  hyper.sample_stride = 1;
  hyper.batch_size = 8;
  hyper.seed = 3;
  const auto a = train(data, hyper);
  const auto b = train(data, hyper);
  std::ostringstream sa, sb;
  write_model(sa, a);
  write_model(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.info.warning.empty());
  CHECK(a.info.epochs == 200);
  for (const auto& t : data) {
    const auto pred = predict(a, extract_features(t.states.back(), t.object_positions));
    CHECK(pred.target.object == t.target_object);
    CHECK(pred.target.direction == t.grasp_direction);
  }
}

TEST_CASE("single-class data trains with a warning") {
  const std::vector<LabeledTrajectory> data{line_trajectory(1, GraspDirection::Top, kObjects)};
  TrainHyper hyper;
  hyper.epochs = 2;
  const auto p = train(data, hyper);
  CHECK_FALSE(p.info.warning.empty());
  CHECK_THROWS_AS(train({}, hyper), std::invalid_argument);
}

TEST_CASE("gate commits at k + t for a constant stream") {
  const GateConfig cfg;
  GateState g;
  const Target t{1, GraspDirection::Right};
  for (int step = 1; step <= 379; ++step) {
    g = gate_update(cfg, g, t);
    CHECK_FALSE(g.committed.has_value());
  }
  g = gate_update(cfg, g, t);
  REQUIRE(g.committed.has_value());
  CHECK(g.committed->commit_step == 380);
  CHECK(g.committed->target == t);
  const auto after = gate_update(cfg, g, Target{2, GraspDirection::Top});
  CHECK(after.committed->target == t);
  CHECK(after.step == g.step);
}

TEST_CASE("gate discards warmup and resets on change") {
  const GateConfig cfg;
  GateState g;
  Rng rng(9);
  for (int step = 1; step <= 300; ++step) g = gate_update(cfg, g, Target{static_cast<int>(rng.below(3)), GraspDirection::Top});
  CHECK(g.run_length == 0);
  CHECK_FALSE(g.current_candidate.has_value());
  for (int i = 0; i < 2000; ++i) {
    g = gate_update(cfg, g, Target{i % 2, GraspDirection::Top});
    CHECK(g.run_length == 1);
  }
  CHECK_FALSE(g.committed.has_value());
  // Direction changes count as a different target.
  GateState h;
  for (int step = 1; step <= 379; ++step) h = gate_update(cfg, h, Target{0, GraspDirection::Top});
  h = gate_update(cfg, h, Target{0, GraspDirection::Right});
  CHECK_FALSE(h.committed.has_value());
  CHECK(h.run_length == 1);
}

TEST_CASE("random streams never commit early") {
  const GateConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    GateState g;
    for (int step = 1; step <= 2000 && !g.committed; ++step) {
      const int o = rng.uniform() < 0.97 ? 0 : 1;
      g = gate_update(cfg, g, Target{o, GraspDirection::Top});
      CHECK(g.run_length <= cfg.consecutive_required);
    }
    if (g.committed) CHECK(g.committed->commit_step >= 380);
  }
}

TEST_CASE("accuracy over progress with oracle predictors") {
  std::vector<LabeledTrajectory> data{line_trajectory(0, GraspDirection::Top, kObjects),
                                      line_trajectory(2, GraspDirection::Right, kObjects)};
  const auto perfect = accuracy_over_progress(
      [](const LabeledTrajectory& t, std::size_t) { return Target{t.target_object, t.grasp_direction}; }, data, 5);
  for (const auto& b : perfect) {
    CHECK(b.object == 1.0);
    CHECK(b.direction == 1.0);
    CHECK(b.trajectories == 2);
  }
  const auto wrong = accuracy_over_progress(
      [](const LabeledTrajectory& t, std::size_t) {
        return Target{(t.target_object + 1) % 3,
                      t.grasp_direction == GraspDirection::Top ? GraspDirection::Right : GraspDirection::Top};
      },
      data, 4);
  for (const auto& b : wrong) {
    CHECK(b.object == 0.0);
    CHECK(b.direction == 0.0);
  }
  CHECK_THROWS_AS(accuracy_over_progress(zero_mlp(MlpShape{}), data, 1), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_over_progress(zero_mlp(MlpShape{}), {}, 4), std::invalid_argument);
}

TEST_CASE("model text round trip is exact") {
  auto p = init_mlp(MlpShape{}, 12, Activation::Tanh);
  p.info.final_loss = 0.123456789;
  p.info.epochs = 7;
  std::stringstream ss;
  write_model(ss, p);
  const auto q = read_model(ss);
  CHECK(q.activation == Activation::Tanh);
  CHECK(q.info.epochs == 7);
  CHECK(q.weights.trunk.size() == 3);
  for (std::size_t l = 0; l < 3; ++l) CHECK(q.weights.trunk[l].weight == p.weights.trunk[l].weight);
  CHECK(q.weights.object_head.bias == p.weights.object_head.bias);
  CHECK(q.input_scale == p.input_scale);
  std::stringstream again;
  write_model(again, q);
  std::stringstream first;
  write_model(first, p);
  CHECK(again.str() == first.str());

  std::stringstream bad("teleop-mlp 99\n");
  CHECK_THROWS(read_model(bad));
}

TEST_CASE("dataset lines round trip and report their line") {
  auto t = line_trajectory(2, GraspDirection::Right, kObjects);
  const auto line = trajectory_to_line(t);
  const auto back = trajectory_from_line(line);
  CHECK(back.id == t.id);
  CHECK(back.target_object == 2);
  CHECK(back.grasp_direction == GraspDirection::Right);
  REQUIRE(back.states.size() == t.states.size());
  CHECK(back.states[5].position == t.states[5].position);
  CHECK(trajectory_to_line(back) == line);

  std::stringstream in(line + "\n{\"id\": 3}\n");
  try {
    read_dataset(in, "data.jsonl");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("data.jsonl:2") != std::string::npos);
  }
}

TEST_CASE("trajectory validation") {
  auto t = line_trajectory(0, GraspDirection::Top, kObjects);
  CHECK_NOTHROW(t.validate());
  auto short_t = t;
  short_t.states.resize(1);
  CHECK_THROWS_AS(short_t.validate(), std::invalid_argument);
  auto back = t;
  back.states[3].timestamp = -1;
  CHECK_THROWS_AS(back.validate(), std::invalid_argument);
  auto bad_unit = t;
  bad_unit.states[2].direction = Vec3(0, 2, 0);
  CHECK_THROWS_AS(bad_unit.validate(), std::invalid_argument);
  auto bad_label = t;
  bad_label.target_object = 3;
  CHECK_THROWS_AS(bad_label.validate(), std::invalid_argument);
}
