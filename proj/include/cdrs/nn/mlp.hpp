#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdrs/nn/types.hpp"

namespace cdrs::nn {

enum class Activation { kNonneg, kIdentity, kSquashing };
enum class Mode { kTrain, kEval };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

inline constexpr double kGroupNormEps = 1e-5;

struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector bias;     // out_dim

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

/// Shape of a fully connected stack. Every hidden layer is
/// fc -> group norm (if norm_groups > 0) -> ReLU -> dropout; the last layer is
/// fc -> final_activation.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 1;
  int norm_groups = 8;
  double dropout_rate = 0.5;
  Activation final_activation = Activation::kIdentity;
};

class MlpNetwork {
 public:
  MlpNetwork() = default;
  /// Glorot-uniform weights, zero biases.
  MlpNetwork(const MlpSpec& spec, Rng& rng);
  MlpNetwork(std::vector<DenseLayer> layers, int norm_groups, double dropout_rate,
             Activation final_activation);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Mutable parameter access. Invalidates every tape recorded before the call.
  std::span<DenseLayer> mutable_layers();

  int norm_groups() const { return norm_groups_; }
  double dropout_rate() const { return dropout_rate_; }
  Activation final_activation() const { return final_activation_; }
  Eigen::Index input_dim() const { return layers_.front().in_dim(); }
  Eigen::Index output_dim() const { return layers_.back().out_dim(); }
  std::size_t parameter_count() const;
  std::uint64_t version() const { return version_; }

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  int norm_groups_ = 0;
  double dropout_rate_ = 0.0;
  Activation final_activation_ = Activation::kIdentity;
  std::uint64_t version_ = 0;
};

/// Activations recorded by forward() for one batch.
struct Tape {
  struct Layer {
    Matrix input;
    Matrix pre;         // affine output
    Matrix normalized;  // group-norm output (hidden layers with norm only)
    Matrix inv_std;
    Matrix mask;        // dropout keep mask scaled by 1/(1-p); empty when unused
  };
  const MlpNetwork* net = nullptr;
  std::uint64_t net_version = 0;
  std::vector<Layer> layers;
  Matrix output;
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

/// Batched forward pass; samples are columns of `input`. In eval mode the
/// random source is never touched and may be null.
ForwardResult forward(const MlpNetwork& net, const Matrix& input, Mode mode, Rng* rng);

/// Convenience wrapper: eval-mode forward without keeping a tape.
Matrix predict(const MlpNetwork& net, const Matrix& input);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
  Matrix input;  // gradient with respect to the network input

  static Gradients zeros_like(const MlpNetwork& net);
  void add_scaled(const Gradients& other, double scale);
};

/// Gradients of sum over the batch of <out_grad, output> for every parameter.
Gradients backward(const MlpNetwork& net, const Tape& tape, const Matrix& out_grad);

/// Standalone group normalization of one vector (no affine terms).
Vector group_norm(const Vector& x, int groups, double eps = kGroupNormEps);

}  // namespace cdrs::nn
