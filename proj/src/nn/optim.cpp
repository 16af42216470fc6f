#include "cdrs/nn/optim.hpp"

#include <cmath>

#include "cdrs/error.hpp"

namespace cdrs::nn {
namespace {

void check_shapes(const MlpNetwork& net, const Gradients& grads) {
  const auto& layers = net.layers();
  require(grads.weights.size() == layers.size() && grads.bias.size() == layers.size(),
          "optimizer: gradient depth does not match network");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    require(grads.weights[k].rows() == layers[k].weights.rows() &&
                grads.weights[k].cols() == layers[k].weights.cols() &&
                grads.bias[k].size() == layers[k].bias.size(),
            "optimizer: gradient shape mismatch in layer " + std::to_string(k));
  }
}

}  // namespace

AdamState AdamState::for_network(const MlpNetwork& net, double lr) {
  require(lr >= 0.0, "AdamState: learning rate must be nonnegative");
  AdamState s;
  s.lr = lr;
  for (const auto& l : net.layers()) {
    s.first_moment_w.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.second_moment_w.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.first_moment_b.push_back(Vector::Zero(l.bias.size()));
    s.second_moment_b.push_back(Vector::Zero(l.bias.size()));
  }
  return s;
}

void adam_step(MlpNetwork& net, const Gradients& grads, AdamState& state) {
  check_shapes(net, grads);
  require(state.first_moment_w.size() == net.layers().size(),
          "adam_step: optimizer state does not match network");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    param.array() -= state.lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + state.eps);
  };

  auto layers = net.mutable_layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weights, grads.weights[k], state.first_moment_w[k], state.second_moment_w[k]);
    update(layers[k].bias, grads.bias[k], state.first_moment_b[k], state.second_moment_b[k]);
  }
}

SgdState SgdState::for_network(const MlpNetwork& net, double lr, double momentum,
                               double weight_decay) {
  SgdState s;
  s.lr = lr;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  for (const auto& l : net.layers()) {
    s.velocity_w.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    s.velocity_b.push_back(Vector::Zero(l.bias.size()));
  }
  return s;
}

void sgd_step(MlpNetwork& net, const Gradients& grads, SgdState& state) {
  check_shapes(net, grads);
  auto layers = net.mutable_layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    state.velocity_w[k] = state.momentum * state.velocity_w[k] + grads.weights[k] +
                          state.weight_decay * layers[k].weights;
    state.velocity_b[k] = state.momentum * state.velocity_b[k] + grads.bias[k];
    layers[k].weights -= state.lr * state.velocity_w[k];
    layers[k].bias -= state.lr * state.velocity_b[k];
  }
}

double step_decay_lr(double base_lr, const std::vector<int>& milestones, double factor,
                     int epoch) {
  double lr = base_lr;
  for (int m : milestones)
    if (epoch >= m) lr *= factor;
  return lr;
}

}  // namespace cdrs::nn
