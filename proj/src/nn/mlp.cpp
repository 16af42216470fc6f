#include "cdrs/nn/mlp.hpp"

#include <cmath>

#include "cdrs/error.hpp"
#include "cdrs/nn/kernels.hpp"

namespace cdrs::nn {
namespace {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_finite(const Matrix& m, std::size_t layer, const char* stage) {
  if (!m.allFinite()) {
    throw NumericalFailure("non-finite " + std::string(stage) + " in layer " +
                           std::to_string(layer));
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kNonneg: return "nonneg";
    case Activation::kIdentity: return "identity";
    case Activation::kSquashing: return "squashing";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "nonneg") return Activation::kNonneg;
  if (name == "identity") return Activation::kIdentity;
  if (name == "squashing") return Activation::kSquashing;
  throw ContractViolation("unknown activation '" + name + "'");
}

MlpNetwork::MlpNetwork(const MlpSpec& spec, Rng& rng)
    : norm_groups_(spec.norm_groups),
      dropout_rate_(spec.dropout_rate),
      final_activation_(spec.final_activation) {
  require(spec.input_dim > 0 && spec.output_dim > 0, "MlpSpec: dimensions must be positive");
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int in = dims[k];
    const int out = dims[k + 1];
    require(in > 0 && out > 0, "MlpSpec: layer widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    // Column-major fill order keeps initialization reproducible across Eigen versions.
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = dist(rng);
    layers_.push_back(std::move(layer));
  }
  validate();
}

MlpNetwork::MlpNetwork(std::vector<DenseLayer> layers, int norm_groups, double dropout_rate,
                       Activation final_activation)
    : layers_(std::move(layers)),
      norm_groups_(norm_groups),
      dropout_rate_(dropout_rate),
      final_activation_(final_activation) {
  validate();
}

void MlpNetwork::validate() const {
  require(!layers_.empty(), "MlpNetwork: at least one layer required");
  require(dropout_rate_ >= 0.0 && dropout_rate_ <= 1.0, "MlpNetwork: dropout rate outside [0,1]");
  require(norm_groups_ >= 0, "MlpNetwork: norm_groups must be nonnegative");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    require(layer.bias.size() == layer.out_dim(),
            "MlpNetwork: bias size mismatch in layer " + std::to_string(k));
    require(layer.weights.allFinite() && layer.bias.allFinite(),
            "MlpNetwork: non-finite parameter in layer " + std::to_string(k));
    if (k + 1 < layers_.size()) {
      require(layer.out_dim() == layers_[k + 1].in_dim(),
              "MlpNetwork: layer " + std::to_string(k) + " output does not chain into layer " +
                  std::to_string(k + 1));
      if (norm_groups_ > 0) {
        require(layer.out_dim() % norm_groups_ == 0,
                "MlpNetwork: norm_groups does not divide hidden width of layer " +
                    std::to_string(k));
      }
    }
  }
}

std::span<DenseLayer> MlpNetwork::mutable_layers() {
  ++version_;
  return layers_;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

ForwardResult forward(const MlpNetwork& net, const Matrix& input, Mode mode, Rng* rng) {
  require(input.rows() == net.input_dim(),
          "forward: input has " + std::to_string(input.rows()) + " rows, network expects " +
              std::to_string(net.input_dim()));
  const bool use_dropout = mode == Mode::kTrain && net.dropout_rate() > 0.0;
  require(!use_dropout || rng != nullptr, "forward: train-mode dropout needs a random source");

  ForwardResult result;
  Tape& tape = result.tape;
  tape.net = &net;
  tape.net_version = net.version();
  const auto& layers = net.layers();
  tape.layers.resize(layers.size());

  Matrix activation = input;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& rec = tape.layers[k];
    rec.input = std::move(activation);
    kernels::affine_parallel(layers[k].weights, layers[k].bias, rec.input, rec.pre);
    check_finite(rec.pre, k, "pre-activation");

    if (k + 1 == layers.size()) {
      switch (net.final_activation()) {
        case Activation::kNonneg: activation = rec.pre.cwiseMax(0.0); break;
        case Activation::kIdentity: activation = rec.pre; break;
        case Activation::kSquashing: activation = rec.pre.unaryExpr(&sigmoid); break;
      }
      break;
    }

    const Matrix* hidden = &rec.pre;
    if (net.norm_groups() > 0) {
      kernels::group_norm_parallel(rec.pre, net.norm_groups(), kGroupNormEps, rec.normalized,
                                   rec.inv_std);
      check_finite(rec.normalized, k, "normalized activation");
      hidden = &rec.normalized;
    }
    activation = hidden->cwiseMax(0.0);
    if (use_dropout) {
      const double p = net.dropout_rate();
      const double scale = p < 1.0 ? 1.0 / (1.0 - p) : 0.0;
      std::bernoulli_distribution keep(1.0 - p);
      rec.mask.resize(activation.rows(), activation.cols());
      for (Eigen::Index c = 0; c < activation.cols(); ++c)
        for (Eigen::Index r = 0; r < activation.rows(); ++r)
          rec.mask(r, c) = keep(*rng) ? scale : 0.0;
      activation = activation.cwiseProduct(rec.mask);
    }
  }
  result.output = activation;
  tape.output = std::move(activation);
  return result;
}

Matrix predict(const MlpNetwork& net, const Matrix& input) {
  return forward(net, input, Mode::kEval, nullptr).output;
}

Gradients Gradients::zeros_like(const MlpNetwork& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  require(weights.size() == other.weights.size(), "Gradients::add_scaled: shape mismatch");
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] += scale * other.weights[k];
    bias[k] += scale * other.bias[k];
  }
}

Gradients backward(const MlpNetwork& net, const Tape& tape, const Matrix& out_grad) {
  require(tape.net == &net && tape.net_version == net.version(),
          "backward: tape was recorded for a different or since-modified network");
  const auto& layers = net.layers();
  require(tape.layers.size() == layers.size(), "backward: tape depth mismatch");
  require(out_grad.rows() == tape.output.rows() && out_grad.cols() == tape.output.cols(),
          "backward: out_grad shape does not match the recorded output");

  Gradients grads;
  grads.weights.resize(layers.size());
  grads.bias.resize(layers.size());

  Matrix upstream = out_grad;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const auto& rec = tape.layers[idx];
    Matrix dz;
    if (idx + 1 == layers.size()) {
      switch (net.final_activation()) {
        case Activation::kNonneg:
          dz = upstream.cwiseProduct((rec.pre.array() > 0.0).cast<double>().matrix());
          break;
        case Activation::kIdentity: dz = upstream; break;
        case Activation::kSquashing: {
          const Matrix s = tape.output;
          dz = upstream.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
          break;
        }
      }
    } else {
      Matrix d = rec.mask.size() > 0 ? Matrix(upstream.cwiseProduct(rec.mask)) : upstream;
      const Matrix& hidden = net.norm_groups() > 0 ? rec.normalized : rec.pre;
      d = d.cwiseProduct((hidden.array() > 0.0).cast<double>().matrix());
      if (net.norm_groups() > 0) {
        kernels::group_norm_grad_parallel(d, rec.normalized, rec.inv_std, net.norm_groups(), dz);
      } else {
        dz = std::move(d);
      }
    }
    kernels::affine_param_grad_parallel(dz, rec.input, grads.weights[idx], grads.bias[idx]);
    kernels::affine_input_grad_parallel(layers[idx].weights, dz, upstream);
  }
  grads.input = std::move(upstream);
  return grads;
}

Vector group_norm(const Vector& x, int groups, double eps) {
  Matrix out;
  Matrix inv_std;
  kernels::group_norm_serial(x, groups, eps, out, inv_std);
  return out.col(0);
}

}  // namespace cdrs::nn
