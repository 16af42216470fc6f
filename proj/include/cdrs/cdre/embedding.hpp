#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "cdrs/nn/types.hpp"

namespace cdrs::cdre {

enum class EmbeddingMode { kOneHot, kContinuous };

/// Fixed (non-learned) label code concatenated to the feature vector.
/// One-hot for class indices; for a normalized label y in [0, 1] the continuous
/// code is [sin(pi s_1 y), cos(pi s_1 y), ..., sin(pi s_k y), cos(pi s_k y)].
class ConditionEmbedding {
 public:
  static ConditionEmbedding one_hot(int num_classes);
  static ConditionEmbedding continuous(std::vector<double> scales);
  /// Octave scales 1, 2, 4, ... giving `dim` entries (dim must be even).
  static ConditionEmbedding continuous_octaves(int dim = 16);

  EmbeddingMode mode() const { return mode_; }
  int num_classes() const { return num_classes_; }
  const std::vector<double>& scales() const { return scales_; }
  int width() const;

  Vector embed(double y) const;
  /// Column j holds embed(labels[j]).
  Matrix embed_batch(std::span<const double> labels) const;

  nlohmann::json to_json() const;
  static ConditionEmbedding from_json(const nlohmann::json& j);

 private:
  void embed_into(double y, double* out) const;

  EmbeddingMode mode_ = EmbeddingMode::kOneHot;
  int num_classes_ = 0;
  std::vector<double> scales_;
};

/// Affine map of raw continuous labels onto [0, 1] fitted to training labels.
struct LabelNormalizer {
  double min = 0.0;
  double max = 1.0;

  static LabelNormalizer fit(std::span<const double> labels);
  double normalize(double raw) const;
  double denormalize(double unit) const { return min + unit * (max - min); }

  nlohmann::json to_json() const;
  static LabelNormalizer from_json(const nlohmann::json& j);
};

}  // namespace cdrs::cdre
