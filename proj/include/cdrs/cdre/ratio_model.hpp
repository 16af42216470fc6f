#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "cdrs/cdre/embedding.hpp"
#include "cdrs/nn/checkpoint.hpp"
#include "cdrs/nn/mlp.hpp"

namespace cdrs::cdre {

struct RatioModelSpec {
  int feature_dim = 0;
  ConditionEmbedding embedding = ConditionEmbedding::one_hot(1);
  std::vector<int> hidden{256, 128, 64, 32};
  int norm_groups = 8;
  double dropout_rate = 0.5;
  /// Initial bias of the output unit; 1 starts the model at the constant ratio.
  double output_bias = 1.0;
};

/// Scores psi(h | y) for a batch of feature columns at one label.
class RatioScorer {
 public:
  virtual ~RatioScorer() = default;
  virtual int feature_dim() const = 0;
  virtual Vector score_batch(const Matrix& features, double y) const = 0;
};

/// psi(h | y): the label code is concatenated to the feature vector at the
/// input of an MLP whose output unit is rectified.
class RatioModel : public RatioScorer {
 public:
  RatioModel(int feature_dim, ConditionEmbedding embedding, nn::MlpNetwork net,
             LabelNormalizer normalizer = {});
  static RatioModel create(const RatioModelSpec& spec, Rng& rng);

  int feature_dim() const override { return feature_dim_; }
  const ConditionEmbedding& embedding() const { return embedding_; }
  const LabelNormalizer& normalizer() const { return normalizer_; }
  void set_normalizer(const LabelNormalizer& n) { normalizer_ = n; }
  const nn::MlpNetwork& net() const { return net_; }
  nn::MlpNetwork& mutable_net() { return net_; }

  /// Vicinity half-width of the fake stream the model was trained on;
  /// infinity means unfiltered.
  double trained_zeta() const { return trained_zeta_; }
  void set_trained_zeta(double zeta) { trained_zeta_ = zeta; }

  /// Network input: features stacked over the label code, one column per sample.
  /// Labels are raw; continuous labels pass through the normalizer first.
  Matrix assemble_input(const Matrix& features, std::span<const double> labels) const;

  double score(const Vector& h, double y) const;
  /// Eval-mode scores of every column of `features` at the given labels.
  Vector score_batch(const Matrix& features, std::span<const double> labels) const;
  Vector score_batch(const Matrix& features, double y) const override;
  /// Reference path: one single-column forward pass per sample.
  Vector score_each(const Matrix& features, std::span<const double> labels) const;

  void store(nn::Checkpoint& ckpt) const;
  static RatioModel restore(const nn::Checkpoint& ckpt);
  void save(const std::filesystem::path& path) const;
  static RatioModel load(const std::filesystem::path& path);

 private:
  int feature_dim_;
  ConditionEmbedding embedding_;
  nn::MlpNetwork net_;
  LabelNormalizer normalizer_;
  double trained_zeta_ = std::numeric_limits<double>::infinity();
};

}  // namespace cdrs::cdre
