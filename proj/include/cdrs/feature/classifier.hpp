#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdrs/feature/extractor.hpp"
#include "cdrs/nn/mlp.hpp"

namespace cdrs::feature {

struct ClassifierTrainConfig {
  double lr = 0.01;
  std::vector<int> lr_decay_epochs{50, 100, 150};
  double lr_decay_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 256;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// Label-supervised extractor for class tasks: encoder D -> 4D -> D (rectified)
/// followed by a linear head D -> C trained with softmax cross-entropy. The
/// encoder output is the feature vector.
class ClassifierExtractor : public FeatureExtractor {
 public:
  ClassifierExtractor(nn::MlpNetwork encoder, nn::MlpNetwork head);
  static ClassifierExtractor create(int input_dim, int num_classes, Rng& rng);

  std::string kind() const override { return "classifier"; }
  int input_dim() const override { return static_cast<int>(encoder_.input_dim()); }
  int num_classes() const { return static_cast<int>(head_.output_dim()); }
  Matrix extract(const Matrix& x) const override;
  /// Class logits, one column per sample.
  Matrix logits(const Matrix& x) const;
  std::vector<int> predict_classes(const Matrix& x) const;

  const nn::MlpNetwork& encoder() const { return encoder_; }
  const nn::MlpNetwork& head() const { return head_; }
  nn::MlpNetwork& mutable_encoder() { return encoder_; }
  nn::MlpNetwork& mutable_head() { return head_; }

  void store(nn::Checkpoint& ckpt) const;
  static ClassifierExtractor restore(const nn::Checkpoint& ckpt);

 private:
  nn::MlpNetwork encoder_;
  nn::MlpNetwork head_;
};

struct ClassifierGradients {
  double loss = 0.0;  // mean cross-entropy
  nn::Gradients encoder;
  nn::Gradients head;
};

ClassifierGradients cross_entropy_gradients(const ClassifierExtractor& model, const Matrix& x,
                                            std::span<const int> classes);

struct ClassifierTrainResult {
  ClassifierExtractor model;
  std::vector<double> loss_history;
};

ClassifierTrainResult train_classifier(const Matrix& x, std::span<const int> classes,
                                       int num_classes, const ClassifierTrainConfig& cfg);

}  // namespace cdrs::feature
