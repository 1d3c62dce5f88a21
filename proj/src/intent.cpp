#include "teleop/intent.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace teleop::intent {

FeatureVector extract_features(const HandState& hand, const std::vector<Vec3>& object_positions) {
  if (object_positions.size() != static_cast<std::size_t>(scene::kDefaultNumObjects))
    throw InvalidArgument("feature extraction expects exactly 3 object positions");
  FeatureVector f{};
  for (int i = 0; i < 3; ++i) f[i] = (hand.position - object_positions[i]).norm();
  f[3] = hand.position.x();
  f[4] = hand.direction.x();
  f[5] = hand.palm_normal.x();
  f[6] = hand.palm_normal.y();
  f[7] = hand.y_rotation;
  return f;
}

void LabeledTrajectory::validate(int num_objects) const {
  if (states.size() < 2) throw InvalidArgument("trajectory '" + id + "' needs at least 2 states");
  if (target_object < 0 || target_object >= num_objects)
    throw InvalidArgument("trajectory '" + id + "' has target_object out of range");
  if (!(rate > 0.0)) throw InvalidArgument("trajectory '" + id + "' has non-positive rate");
  if (object_positions.size() != static_cast<std::size_t>(num_objects))
    throw InvalidArgument("trajectory '" + id + "' lists the wrong number of object positions");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    if (std::abs(s.direction.norm() - 1.0) > 1e-6 || std::abs(s.palm_normal.norm() - 1.0) > 1e-6)
      throw InvalidArgument("trajectory '" + id + "' has non-unit direction or palm normal");
    if (i > 0 && s.timestamp < states[i - 1].timestamp)
      throw InvalidArgument("trajectory '" + id + "' has decreasing timestamps");
  }
}

namespace {

DenseLayer he_layer(int in, int out, Rng& rng) {
  DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
  const double s = std::sqrt(2.0 / in);
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) l.weight(r, c) = s * rng.normal();
  return l;
}

DenseLayer zero_layer(int in, int out) { return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)}; }

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
  if (a == Activation::Relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative expressed through pre-activation z.
Eigen::MatrixXd activate_grad(Activation a, const Eigen::MatrixXd& z) {
  if (a == Activation::Relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

void check_layer(const DenseLayer& l, int expected_in, const char* name) {
  if (l.weight.cols() != expected_in || l.weight.rows() != l.bias.size() || l.bias.size() < 1)
    throw InvalidArgument(std::string("layer '") + name + "' has inconsistent shape");
  if (!l.weight.allFinite() || !l.bias.allFinite())
    throw InvalidArgument(std::string("layer '") + name + "' has non-finite weights");
}

Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd p(s.rows(), s.cols());
  for (Eigen::Index c = 0; c < s.cols(); ++c) p.col(c) = softmax(s.col(c));
  return p;
}

}  // namespace

void MlpParams::validate() const {
  int in = static_cast<int>(input_mean.size());
  if (in < 1 || input_scale.size() != in) throw InvalidArgument("input normalisation has inconsistent size");
  if ((input_scale.array() <= 0.0).any()) throw InvalidArgument("input scale must be positive");
  for (std::size_t i = 0; i < weights.trunk.size(); ++i) {
    check_layer(weights.trunk[i], in, "trunk");
    in = static_cast<int>(weights.trunk[i].bias.size());
  }
  check_layer(weights.object_head, in, "object_head");
  check_layer(weights.direction_head, in, "direction_head");
}

MlpParams init_mlp(const MlpShape& shape, std::uint64_t seed, Activation activation) {
  Rng rng(seed, "mlp-init");
  MlpParams p;
  p.activation = activation;
  p.seed = seed;
  int in = shape.inputs;
  for (int h : shape.hidden) {
    p.weights.trunk.push_back(he_layer(in, h, rng));
    in = h;
  }
  p.weights.object_head = he_layer(in, shape.num_objects, rng);
  p.weights.direction_head = he_layer(in, shape.num_directions, rng);
  p.input_mean = Eigen::VectorXd::Zero(shape.inputs);
  p.input_scale = Eigen::VectorXd::Ones(shape.inputs);
  return p;
}

MlpParams zero_mlp(const MlpShape& shape) {
  MlpParams p;
  int in = shape.inputs;
  for (int h : shape.hidden) {
    p.weights.trunk.push_back(zero_layer(in, h));
    in = h;
  }
  p.weights.object_head = zero_layer(in, shape.num_objects);
  p.weights.direction_head = zero_layer(in, shape.num_directions);
  p.input_mean = Eigen::VectorXd::Zero(shape.inputs);
  p.input_scale = Eigen::VectorXd::Ones(shape.inputs);
  return p;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  const double m = scores.maxCoeff();
  Eigen::VectorXd e = (scores.array() - m).exp().matrix();
  return e / e.sum();
}

int argmax(const Eigen::VectorXd& scores, const std::vector<bool>& excluded) {
  const bool all_excluded =
      !excluded.empty() && std::all_of(excluded.begin(), excluded.end(), [](bool b) { return b; });
  int best = -1;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!all_excluded && i < static_cast<Eigen::Index>(excluded.size()) && excluded[i]) continue;
    if (best < 0 || scores[i] > scores[best]) best = static_cast<int>(i);
  }
  return best;
}

namespace {

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // z per trunk layer
  std::vector<Eigen::MatrixXd> post;  // a per layer, post[0] = normalised input
  Eigen::MatrixXd object_scores;
  Eigen::MatrixXd direction_scores;
};

ForwardCache forward_batch(const MlpParams& p, const Eigen::MatrixXd& x) {
  ForwardCache c;
  c.post.push_back(((x.colwise() - p.input_mean).array().colwise() / p.input_scale.array()).matrix());
  for (const auto& layer : p.weights.trunk) {
    Eigen::MatrixXd z = layer.weight * c.post.back();
    z.colwise() += layer.bias;
    c.post.push_back(activate(p.activation, z));
    c.pre.push_back(std::move(z));
  }
  c.object_scores = p.weights.object_head.weight * c.post.back();
  c.object_scores.colwise() += p.weights.object_head.bias;
  c.direction_scores = p.weights.direction_head.weight * c.post.back();
  c.direction_scores.colwise() += p.weights.direction_head.bias;
  return c;
}

}  // namespace

Scores mlp_forward(const MlpParams& params, const FeatureVector& features) {
  Eigen::VectorXd x(kNumFeatures);
  for (int i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(features[i])) throw InvalidArgument("features must be finite");
    x[i] = features[i];
  }
  if (params.input_mean.size() != kNumFeatures) throw InvalidArgument("model does not take 8 features");
  const auto c = forward_batch(params, x);
  return {c.object_scores.col(0), c.direction_scores.col(0)};
}

Prediction predict(const MlpParams& params, const FeatureVector& features, const std::vector<bool>& excluded_objects) {
  const Scores s = mlp_forward(params, features);
  Prediction p;
  p.object_probs = softmax(s.object);
  p.direction_probs = softmax(s.direction);
  p.target.object = argmax(s.object, excluded_objects);
  p.target.direction = static_cast<GraspDirection>(argmax(s.direction));
  p.object_confidence = p.object_probs[p.target.object];
  p.direction_confidence = p.direction_probs[static_cast<int>(p.target.direction)];
  return p;
}

double loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& features,
                         const std::vector<int>& object_labels, const std::vector<int>& direction_labels,
                         MlpWeights* grad) {
  const Eigen::Index b = features.cols();
  if (b == 0 || object_labels.size() != static_cast<std::size_t>(b) ||
      direction_labels.size() != static_cast<std::size_t>(b))
    throw InvalidArgument("batch and label sizes differ");
  const auto c = forward_batch(params, features);
  Eigen::MatrixXd po = column_softmax(c.object_scores);
  Eigen::MatrixXd pd = column_softmax(c.direction_scores);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    loss -= std::log(std::max(po(object_labels[i], i), 1e-300));
    loss -= std::log(std::max(pd(direction_labels[i], i), 1e-300));
  }
  loss /= static_cast<double>(b);
  if (!grad) return loss;

  for (Eigen::Index i = 0; i < b; ++i) {
    po(object_labels[i], i) -= 1.0;
    pd(direction_labels[i], i) -= 1.0;
  }
  po /= static_cast<double>(b);
  pd /= static_cast<double>(b);

  const auto& w = params.weights;
  const Eigen::MatrixXd& top = c.post.back();
  grad->object_head = {po * top.transpose(), po.rowwise().sum()};
  grad->direction_head = {pd * top.transpose(), pd.rowwise().sum()};
  Eigen::MatrixXd delta = w.object_head.weight.transpose() * po + w.direction_head.weight.transpose() * pd;
  grad->trunk.resize(w.trunk.size());
  for (std::size_t l = w.trunk.size(); l-- > 0;) {
    delta = delta.cwiseProduct(activate_grad(params.activation, c.pre[l]));
    grad->trunk[l] = {delta * c.post[l].transpose(), delta.rowwise().sum()};
    if (l > 0) delta = w.trunk[l].weight.transpose() * delta;
  }
  return loss;
}

namespace {

void sgd_update(DenseLayer& w, DenseLayer& v, const DenseLayer& g, double lr, double mu) {
  v.weight = mu * v.weight - lr * g.weight;
  v.bias = mu * v.bias - lr * g.bias;
  w.weight += v.weight;
  w.bias += v.bias;
}

DenseLayer zeros_like(const DenseLayer& l) {
  return {Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())};
}

}  // namespace

MlpParams train(const std::vector<LabeledTrajectory>& dataset, const TrainHyper& hyper) {
  if (dataset.empty()) throw InvalidArgument("training dataset is empty");
  if (hyper.epochs < 1 || hyper.batch_size < 1 || hyper.sample_stride < 1 || !(hyper.learning_rate > 0.0))
    throw InvalidArgument("invalid training hyper-parameters");

  std::vector<FeatureVector> feats;
  std::vector<int> obj;
  std::vector<int> dir;
  for (const auto& traj : dataset) {
    traj.validate(hyper.shape.num_objects);
    const std::size_t n = traj.states.size();
    for (std::size_t i = 0; i < n; i += hyper.sample_stride) {
      feats.push_back(extract_features(traj.states[i], traj.object_positions));
      obj.push_back(traj.target_object);
      dir.push_back(static_cast<int>(traj.grasp_direction));
    }
    if ((n - 1) % hyper.sample_stride != 0) {
      feats.push_back(extract_features(traj.states.back(), traj.object_positions));
      obj.push_back(traj.target_object);
      dir.push_back(static_cast<int>(traj.grasp_direction));
    }
  }
  const auto n_ex = static_cast<Eigen::Index>(feats.size());
  Eigen::MatrixXd x(kNumFeatures, n_ex);
  for (Eigen::Index i = 0; i < n_ex; ++i)
    for (int k = 0; k < kNumFeatures; ++k) x(k, i) = feats[i][k];

  MlpParams params = init_mlp(hyper.shape, hyper.seed);
  params.input_mean = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - params.input_mean;
  params.input_scale =
      (centered.array().square().rowwise().sum() / static_cast<double>(n_ex)).sqrt().max(1e-6).matrix();

  const bool single_object = std::all_of(obj.begin(), obj.end(), [&](int o) { return o == obj[0]; });
  const bool single_direction = std::all_of(dir.begin(), dir.end(), [&](int d) { return d == dir[0]; });
  if (single_object || single_direction)
    params.info.warning = "degenerate dataset: a single class covers every example";

  MlpWeights velocity;
  for (const auto& l : params.weights.trunk) velocity.trunk.push_back(zeros_like(l));
  velocity.object_head = zeros_like(params.weights.object_head);
  velocity.direction_head = zeros_like(params.weights.direction_head);

  std::vector<Eigen::Index> order(n_ex);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  MlpWeights grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng rng(hyper.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (Eigen::Index i = n_ex - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    for (Eigen::Index start = 0; start < n_ex; start += hyper.batch_size) {
      const Eigen::Index end = std::min<Eigen::Index>(n_ex, start + hyper.batch_size);
      Eigen::MatrixXd batch(kNumFeatures, end - start);
      std::vector<int> bo(end - start);
      std::vector<int> bd(end - start);
      for (Eigen::Index i = start; i < end; ++i) {
        batch.col(i - start) = x.col(order[i]);
        bo[i - start] = obj[order[i]];
        bd[i - start] = dir[order[i]];
      }
      loss_and_gradient(params, batch, bo, bd, &grad);
      for (std::size_t l = 0; l < params.weights.trunk.size(); ++l)
        sgd_update(params.weights.trunk[l], velocity.trunk[l], grad.trunk[l], hyper.learning_rate, hyper.momentum);
      sgd_update(params.weights.object_head, velocity.object_head, grad.object_head, hyper.learning_rate,
                 hyper.momentum);
      sgd_update(params.weights.direction_head, velocity.direction_head, grad.direction_head, hyper.learning_rate,
                 hyper.momentum);
    }
  }
  params.info.epochs = hyper.epochs;
  params.info.final_loss = loss_and_gradient(params, x, obj, dir, nullptr);
  return params;
}

GateState gate_update(const GateConfig& config, const GateState& gate, const Target& prediction) {
  if (gate.committed) return gate;
  GateState next = gate;
  ++next.step;
  if (next.step <= config.warmup_steps) return next;
  if (next.current_candidate && *next.current_candidate == prediction) {
    ++next.run_length;
  } else {
    next.current_candidate = prediction;
    next.run_length = 1;
  }
  if (next.run_length >= config.consecutive_required) next.committed = GateCommit{prediction, next.step};
  return next;
}

std::vector<BinAccuracy> accuracy_over_progress(const StepPredictor& predictor,
                                                const std::vector<LabeledTrajectory>& trajectories, int bins) {
  if (bins < 2) throw InvalidArgument("accuracy_over_progress needs at least 2 bins");
  if (trajectories.empty()) throw InvalidArgument("accuracy_over_progress needs trajectories");
  std::vector<BinAccuracy> out(bins);
  std::vector<double> obj_hits(bins);
  std::vector<double> dir_hits(bins);
  std::vector<int> counts(bins);
  for (const auto& traj : trajectories) {
    std::fill(obj_hits.begin(), obj_hits.end(), 0.0);
    std::fill(dir_hits.begin(), dir_hits.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    const std::size_t n = traj.states.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double progress = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
      const int b = std::min(bins - 1, static_cast<int>(progress * bins));
      const Target t = predictor(traj, i);
      obj_hits[b] += t.object == traj.target_object ? 1.0 : 0.0;
      dir_hits[b] += t.direction == traj.grasp_direction ? 1.0 : 0.0;
      ++counts[b];
    }
    for (int b = 0; b < bins; ++b) {
      if (counts[b] == 0) continue;
      out[b].object += obj_hits[b] / counts[b];
      out[b].direction += dir_hits[b] / counts[b];
      ++out[b].trajectories;
    }
  }
  for (auto& b : out) {
    if (b.trajectories == 0) continue;
    b.object /= b.trajectories;
    b.direction /= b.trajectories;
  }
  return out;
}

std::vector<BinAccuracy> accuracy_over_progress(const MlpParams& params,
                                                const std::vector<LabeledTrajectory>& trajectories, int bins) {
  return accuracy_over_progress(
      [&](const LabeledTrajectory& traj, std::size_t i) {
        return predict(params, extract_features(traj.states[i], traj.object_positions)).target;
      },
      trajectories, bins);
}

}  // namespace teleop::intent
