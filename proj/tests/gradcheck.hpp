#pragma once

#include "teleop/intent.hpp"
#include "teleop/rng.hpp"

#include <algorithm>
#include <cmath>

namespace teleop::testing {

// Relative error of analytic vs central-difference gradients over every parameter.
inline double gradient_check(std::uint64_t seed) {
  intent::MlpShape shape;
  shape.hidden = {4, 4};
  intent::MlpParams params = intent::init_mlp(shape, seed);
  Rng rng(seed, "gradcheck");
  for (Eigen::Index i = 0; i < params.input_mean.size(); ++i) {
    params.input_mean[i] = rng.normal(0.0, 0.1);
    params.input_scale[i] = rng.uniform(0.5, 2.0);
  }
  // Zero-initialised biases can leave a pre-activation exactly on the ReLU kink (a sample whose
  // previous layer is entirely inactive), where finite differences are meaningless.
  auto jitter = [&](intent::DenseLayer& l) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = rng.normal(0.0, 0.1);
  };
  for (auto& l : params.weights.trunk) jitter(l);
  jitter(params.weights.object_head);
  jitter(params.weights.direction_head);
  const int batch = 6;
  Eigen::MatrixXd x(intent::kNumFeatures, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<int> obj(batch), dir(batch);
  for (int i = 0; i < batch; ++i) {
    obj[i] = static_cast<int>(rng.below(3));
    dir[i] = static_cast<int>(rng.below(2));
  }
  intent::MlpWeights grad;
  intent::loss_and_gradient(params, x, obj, dir, &grad);

  std::vector<std::pair<intent::DenseLayer*, const intent::DenseLayer*>> layers;
  for (std::size_t l = 0; l < params.weights.trunk.size(); ++l) layers.push_back({&params.weights.trunk[l], &grad.trunk[l]});
  layers.push_back({&params.weights.object_head, &grad.object_head});
  layers.push_back({&params.weights.direction_head, &grad.direction_head});

  const double h = 1e-5;
  double num_sq = 0.0, diff_sq = 0.0, ana_sq = 0.0;
  auto probe = [&](double& v, double analytic) {
    const double saved = v;
    v = saved + h;
    const double up = intent::loss_and_gradient(params, x, obj, dir, nullptr);
    v = saved - h;
    const double down = intent::loss_and_gradient(params, x, obj, dir, nullptr);
    v = saved;
    const double numeric = (up - down) / (2.0 * h);
    num_sq += numeric * numeric;
    ana_sq += analytic * analytic;
    diff_sq += (numeric - analytic) * (numeric - analytic);
  };
  for (auto [layer, g] : layers) {
    for (Eigen::Index i = 0; i < layer->weight.size(); ++i) probe(layer->weight.data()[i], g->weight.data()[i]);
    for (Eigen::Index i = 0; i < layer->bias.size(); ++i) probe(layer->bias.data()[i], g->bias.data()[i]);
  }
  return std::sqrt(diff_sq) / std::max(1e-12, std::sqrt(num_sq) + std::sqrt(ana_sq));
}

}  // namespace teleop::testing
