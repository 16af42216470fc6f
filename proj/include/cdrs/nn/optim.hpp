#pragma once

#include <cstdint>
#include <vector>

#include "cdrs/nn/mlp.hpp"

namespace cdrs::nn {

struct AdamState {
  std::vector<Matrix> first_moment_w;
  std::vector<Vector> first_moment_b;
  std::vector<Matrix> second_moment_w;
  std::vector<Vector> second_moment_b;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zero moments shaped like `net`.
  static AdamState for_network(const MlpNetwork& net, double lr);
};

/// One bias-corrected Adam update of every parameter of `net`.
void adam_step(MlpNetwork& net, const Gradients& grads, AdamState& state);

/// Plain SGD with heavy-ball momentum and L2 weight decay (decay applies to weights only).
struct SgdState {
  std::vector<Matrix> velocity_w;
  std::vector<Vector> velocity_b;
  double lr = 1e-2;
  double momentum = 0.9;
  double weight_decay = 0.0;

  static SgdState for_network(const MlpNetwork& net, double lr, double momentum,
                              double weight_decay);
};

void sgd_step(MlpNetwork& net, const Gradients& grads, SgdState& state);

/// Step schedule: lr * factor^(number of milestones <= epoch).
double step_decay_lr(double base_lr, const std::vector<int>& milestones, double factor, int epoch);

}  // namespace cdrs::nn
