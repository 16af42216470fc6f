#include "cdrs/cdre/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cdrs/error.hpp"

namespace cdrs::cdre {

ConditionEmbedding ConditionEmbedding::one_hot(int num_classes) {
  require(num_classes >= 1, "one_hot embedding needs at least one class");
  ConditionEmbedding e;
  e.mode_ = EmbeddingMode::kOneHot;
  e.num_classes_ = num_classes;
  return e;
}

ConditionEmbedding ConditionEmbedding::continuous(std::vector<double> scales) {
  require(!scales.empty(), "continuous embedding needs at least one scale");
  for (double s : scales) require(std::isfinite(s) && s > 0.0, "embedding scales must be positive");
  ConditionEmbedding e;
  e.mode_ = EmbeddingMode::kContinuous;
  e.scales_ = std::move(scales);
  return e;
}

ConditionEmbedding ConditionEmbedding::continuous_octaves(int dim) {
  require(dim >= 2 && dim % 2 == 0, "continuous embedding width must be even and >= 2");
  std::vector<double> scales;
  for (int k = 0; k < dim / 2; ++k) scales.push_back(std::ldexp(1.0, k));
  return continuous(std::move(scales));
}

int ConditionEmbedding::width() const {
  return mode_ == EmbeddingMode::kOneHot ? num_classes_ : 2 * static_cast<int>(scales_.size());
}

void ConditionEmbedding::embed_into(double y, double* out) const {
  if (mode_ == EmbeddingMode::kOneHot) {
    require(std::isfinite(y) && y >= 0.0 && y < num_classes_ && y == std::floor(y),
            "class label out of range [0, " + std::to_string(num_classes_) + ")");
    std::fill(out, out + num_classes_, 0.0);
    out[static_cast<int>(y)] = 1.0;
    return;
  }
  require(std::isfinite(y) && y >= 0.0 && y <= 1.0, "continuous label outside [0, 1]");
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    const double angle = std::numbers::pi * scales_[k] * y;
    out[2 * k] = std::sin(angle);
    out[2 * k + 1] = std::cos(angle);
  }
}

Vector ConditionEmbedding::embed(double y) const {
  Vector v(width());
  embed_into(y, v.data());
  return v;
}

Matrix ConditionEmbedding::embed_batch(std::span<const double> labels) const {
  Matrix m(width(), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    embed_into(labels[j], m.col(static_cast<Eigen::Index>(j)).data());
  }
  return m;
}

nlohmann::json ConditionEmbedding::to_json() const {
  if (mode_ == EmbeddingMode::kOneHot) return {{"mode", "one_hot"}, {"num_classes", num_classes_}};
  return {{"mode", "continuous"}, {"scales", scales_}};
}

ConditionEmbedding ConditionEmbedding::from_json(const nlohmann::json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "one_hot") return one_hot(j.at("num_classes").get<int>());
  if (mode == "continuous") return continuous(j.at("scales").get<std::vector<double>>());
  throw FormatError("unknown embedding mode '" + mode + "'");
}

LabelNormalizer LabelNormalizer::fit(std::span<const double> labels) {
  require(!labels.empty(), "LabelNormalizer::fit: no labels");
  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  require(*hi > *lo, "LabelNormalizer::fit: labels must span a positive range");
  return {*lo, *hi};
}

double LabelNormalizer::normalize(double raw) const {
  const double unit = (raw - min) / (max - min);
  // Snap rounding noise at the ends so that min and max map exactly to 0 and 1.
  if (unit < 0.0 && unit > -1e-12) return 0.0;
  if (unit > 1.0 && unit < 1.0 + 1e-12) return 1.0;
  return unit;
}

nlohmann::json LabelNormalizer::to_json() const { return {{"min", min}, {"max", max}}; }

LabelNormalizer LabelNormalizer::from_json(const nlohmann::json& j) {
  return {j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace cdrs::cdre
