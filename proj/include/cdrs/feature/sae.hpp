#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdrs/feature/extractor.hpp"
#include "cdrs/nn/mlp.hpp"

namespace cdrs::feature {

struct SaeTrainConfig {
  double lambda_prime = 1e-3;
  double lr = 0.01;
  std::vector<int> lr_decay_epochs{50, 100, 150};
  double lr_decay_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 256;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// Per-sample loss: (1/D)|x - x_hat|^2 + (y - y_hat)^2 + lambda' (1/D)|h|_1.
double sae_loss(const Vector& x, const Vector& x_hat, double y, double y_hat, const Vector& h,
                double lambda_prime);

/// Dense sparse autoencoder: encoder D -> 4D -> D (rectified), decoder D -> 4D -> D,
/// label head D -> 64 -> 1 (rectified) reading the code h.
class SparseAutoencoder : public FeatureExtractor, public LabelPredictor {
 public:
  SparseAutoencoder(nn::MlpNetwork encoder, nn::MlpNetwork decoder, nn::MlpNetwork predictor);
  static SparseAutoencoder create(int input_dim, Rng& rng);

  std::string kind() const override { return "sae"; }
  int input_dim() const override { return static_cast<int>(encoder_.input_dim()); }
  Matrix extract(const Matrix& x) const override;
  Vector predict_labels(const Matrix& x) const override;
  Matrix reconstruct(const Matrix& x) const;

  const nn::MlpNetwork& encoder() const { return encoder_; }
  const nn::MlpNetwork& decoder() const { return decoder_; }
  const nn::MlpNetwork& predictor() const { return predictor_; }
  nn::MlpNetwork& mutable_encoder() { return encoder_; }
  nn::MlpNetwork& mutable_decoder() { return decoder_; }
  nn::MlpNetwork& mutable_predictor() { return predictor_; }

  void store(nn::Checkpoint& ckpt) const;
  static SparseAutoencoder restore(const nn::Checkpoint& ckpt);

 private:
  nn::MlpNetwork encoder_;
  nn::MlpNetwork decoder_;
  nn::MlpNetwork predictor_;
};

struct SaeGradients {
  double loss = 0.0;  // batch mean of sae_loss
  nn::Gradients encoder;
  nn::Gradients decoder;
  nn::Gradients predictor;
};

/// Mean loss over the columns of x and its gradient for all three networks.
SaeGradients sae_loss_gradients(const SparseAutoencoder& sae, const Matrix& x,
                                std::span<const double> labels, double lambda_prime,
                                nn::Mode mode, Rng* rng);

struct SaeTrainResult {
  SparseAutoencoder model;
  std::vector<double> loss_history;  // one entry per iteration
};

/// Labels must already be normalized to [0, 1].
SaeTrainResult train_sae(const Matrix& x, std::span<const double> labels,
                         const SaeTrainConfig& cfg);
/// Continues training an existing model (used for paired runs from the same initialization).
std::vector<double> train_sae(SparseAutoencoder& sae, const Matrix& x,
                              std::span<const double> labels, const SaeTrainConfig& cfg);

}  // namespace cdrs::feature
