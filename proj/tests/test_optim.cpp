#include <doctest.h>

#include <cmath>

#include "cdrs/error.hpp"
#include "cdrs/nn/optim.hpp"

using namespace cdrs;
using namespace cdrs::nn;

namespace {

MlpNetwork tiny_net() {
  Matrix w(2, 3);
  w << 0.1, -0.2, 0.3, 0.4, 0.5, -0.6;
  Vector b(2);
  b << 0.01, -0.02;
  return MlpNetwork({DenseLayer{w, b}}, 0, 0.0, Activation::kIdentity);
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged and counts the step") {
  MlpNetwork net = tiny_net();
  const auto before = net.layers();
  auto state = AdamState::for_network(net, 1e-3);
  CHECK(state.step_count == 0);
  adam_step(net, Gradients::zeros_like(net), state);
  CHECK(state.step_count == 1);
  CHECK(net.layers()[0].weights == before[0].weights);
  CHECK(net.layers()[0].bias == before[0].bias);
}

TEST_CASE("adam: first step matches a hand-rolled bias-corrected update") {
  MlpNetwork net = tiny_net();
  const Matrix w0 = net.layers()[0].weights;
  Gradients g = Gradients::zeros_like(net);
  g.weights[0] << 0.5, -2.0, 0.0, 1e-3, 3.0, -0.25;
  g.bias[0] << -1.0, 0.2;
  const double lr = 0.01;
  auto state = AdamState::for_network(net, lr);
  adam_step(net, g, state);

  for (Eigen::Index i = 0; i < w0.size(); ++i) {
    const double gi = g.weights[0].data()[i];
    // m_hat = g, v_hat = g^2 after one step.
    const double m_hat = (1 - 0.9) * gi / (1 - 0.9);
    const double v_hat = (1 - 0.999) * gi * gi / (1 - 0.999);
    const double expected = w0.data()[i] - lr * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(net.layers()[0].weights.data()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  // For gradients well above eps the first step moves each coordinate by -lr*sign(g).
  CHECK(net.layers()[0].weights(0, 0) - w0(0, 0) == doctest::Approx(-lr).epsilon(1e-6));
  CHECK(net.layers()[0].weights(0, 1) - w0(0, 1) == doctest::Approx(lr).epsilon(1e-6));
}

TEST_CASE("adam rejects mismatched gradient shapes") {
  MlpNetwork net = tiny_net();
  auto state = AdamState::for_network(net, 1e-3);
  Gradients g = Gradients::zeros_like(net);
  g.weights[0] = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(adam_step(net, g, state), ContractViolation);
}

TEST_CASE("sgd step and step-decay schedule") {
  MlpNetwork net = tiny_net();
  const Matrix w0 = net.layers()[0].weights;
  Gradients g = Gradients::zeros_like(net);
  g.weights[0].setOnes();
  auto state = SgdState::for_network(net, 0.1, 0.9, 0.0);
  sgd_step(net, g, state);
  CHECK((net.layers()[0].weights - (w0.array() - 0.1).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  sgd_step(net, g, state);  // velocity 1.9
  CHECK((net.layers()[0].weights - (w0.array() - 0.29).matrix()).cwiseAbs().maxCoeff() < 1e-15);

  CHECK(step_decay_lr(1e-4, {80, 150}, 0.1, 0) == 1e-4);
  CHECK(step_decay_lr(1e-4, {80, 150}, 0.1, 80) == doctest::Approx(1e-5));
  CHECK(step_decay_lr(1e-4, {80, 150}, 0.1, 199) == doctest::Approx(1e-6));
}
