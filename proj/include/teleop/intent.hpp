#pragma once

#include "teleop/geometry.hpp"
#include "teleop/scene.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace teleop::intent {

using scene::GraspDirection;

struct HandState {
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::UnitY();
  Vec3 palm_normal = -Vec3::UnitZ();
  double y_rotation = 0.0;
  double timestamp = 0.0;
};

inline constexpr int kNumFeatures = 8;

/// [d_obj1, d_obj2, d_obj3, pos_x, dir_x, normal_x, normal_y, y_rotation]. The order is public.
using FeatureVector = std::array<double, kNumFeatures>;

FeatureVector extract_features(const HandState& hand, const std::vector<Vec3>& object_positions);

struct LabeledTrajectory {
  std::string id;
  std::vector<HandState> states;
  int target_object = 0;
  GraspDirection grasp_direction = GraspDirection::Top;
  double rate = 180.0;      // Hz
  double duration = 0.0;    // s
  std::vector<Vec3> object_positions;  // layout the trajectory was recorded in

  /// Throws InvalidArgument if fewer than 2 states, timestamps decrease or unit vectors drift.
  void validate(int num_objects = scene::kDefaultNumObjects) const;
};

enum class Activation { Relu, Tanh };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct MlpWeights {
  std::vector<DenseLayer> trunk;
  DenseLayer object_head;
  DenseLayer direction_head;
};

struct TrainingInfo {
  double final_loss = 0.0;
  int epochs = 0;
  std::string warning;
};

struct MlpShape {
  int inputs = kNumFeatures;
  std::vector<int> hidden = {64, 64, 64};
  int num_objects = scene::kDefaultNumObjects;
  int num_directions = scene::kNumDirections;
};

struct MlpParams {
  MlpWeights weights;
  Activation activation = Activation::Relu;
  /// Features are standardised as (x - input_mean) / input_scale before the trunk.
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  std::uint64_t seed = 0;
  TrainingInfo info;

  int num_objects() const { return static_cast<int>(weights.object_head.bias.size()); }
  int num_directions() const { return static_cast<int>(weights.direction_head.bias.size()); }
  void validate() const;
};

/// He-initialised weights, zero biases, identity input normalisation.
MlpParams init_mlp(const MlpShape& shape, std::uint64_t seed, Activation activation = Activation::Relu);
MlpParams zero_mlp(const MlpShape& shape);

struct Scores {
  Eigen::VectorXd object;
  Eigen::VectorXd direction;
};

Scores mlp_forward(const MlpParams& params, const FeatureVector& features);

Eigen::VectorXd softmax(const Eigen::VectorXd& scores);
/// First index of the maximum; indices flagged in `excluded` are skipped unless all are.
int argmax(const Eigen::VectorXd& scores, const std::vector<bool>& excluded = {});

struct Target {
  int object = 0;
  GraspDirection direction = GraspDirection::Top;
  bool operator==(const Target&) const = default;
};

struct Prediction {
  Target target;
  double object_confidence = 0.0;
  double direction_confidence = 0.0;
  Eigen::VectorXd object_probs;
  Eigen::VectorXd direction_probs;
};

Prediction predict(const MlpParams& params, const FeatureVector& features,
                   const std::vector<bool>& excluded_objects = {});

/// Mean over the batch of the summed per-head cross-entropy. Columns of `features` are raw
/// feature vectors. When `grad` is non-null it receives d(loss)/d(weights).
double loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& features,
                         const std::vector<int>& object_labels, const std::vector<int>& direction_labels,
                         MlpWeights* grad);

struct TrainHyper {
  double learning_rate = 0.02;
  double momentum = 0.9;
  int epochs = 40;
  int batch_size = 64;
  int sample_stride = 4;  // use every n-th timestep of each trajectory
  std::uint64_t seed = 0;
  MlpShape shape;
};

MlpParams train(const std::vector<LabeledTrajectory>& dataset, const TrainHyper& hyper);

struct GateConfig {
  int consecutive_required = 80;  // t
  int warmup_steps = 300;         // k
};

struct GateCommit {
  Target target;
  int commit_step = 0;
};

struct GateState {
  std::optional<Target> current_candidate;
  int run_length = 0;
  int step = 0;
  std::optional<GateCommit> committed;
};

GateState gate_update(const GateConfig& config, const GateState& gate, const Target& prediction);

struct BinAccuracy {
  double object = 0.0;
  double direction = 0.0;
  int trajectories = 0;  // trajectories contributing to the bin
};

using StepPredictor = std::function<Target(const LabeledTrajectory&, std::size_t step)>;

/// Per-bin accuracy over normalised episode progress, averaged over trajectories.
std::vector<BinAccuracy> accuracy_over_progress(const StepPredictor& predictor,
                                                const std::vector<LabeledTrajectory>& trajectories, int bins);
std::vector<BinAccuracy> accuracy_over_progress(const MlpParams& params,
                                                const std::vector<LabeledTrajectory>& trajectories, int bins);

// Model file: see docs/formats.md.
void write_model(std::ostream& out, const MlpParams& params);
MlpParams read_model(std::istream& in);
void save_model(const std::string& path, const MlpParams& params);
MlpParams load_model(const std::string& path);

// Trajectory dataset: one JSON object per line, see docs/formats.md.
std::string trajectory_to_line(const LabeledTrajectory& traj);
LabeledTrajectory trajectory_from_line(const std::string& line);
void write_dataset(std::ostream& out, const std::vector<LabeledTrajectory>& dataset);
std::vector<LabeledTrajectory> read_dataset(std::istream& in, const std::string& source = "<stream>");
void save_dataset(const std::string& path, const std::vector<LabeledTrajectory>& dataset);
std::vector<LabeledTrajectory> load_dataset(const std::string& path);

}  // namespace teleop::intent
