#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cdrs/nn/checkpoint.hpp"
#include "cdrs/nn/types.hpp"

namespace cdrs::feature {

/// h = phi(x), column by column. Output has as many rows as the input.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string kind() const = 0;
  virtual int input_dim() const = 0;
  virtual Matrix extract(const Matrix& x) const = 0;
  Vector extract(const Vector& x) const { return extract(Matrix(x)).col(0); }
};

/// Scalar label prediction y_hat(x), column by column.
class LabelPredictor {
 public:
  virtual ~LabelPredictor() = default;
  virtual Vector predict_labels(const Matrix& x) const = 0;
};

class IdentityExtractor : public FeatureExtractor {
 public:
  explicit IdentityExtractor(int dim);
  std::string kind() const override { return "identity"; }
  int input_dim() const override { return dim_; }
  Matrix extract(const Matrix& x) const override;

 private:
  int dim_;
};

/// Writes any extractor into a checkpoint; the meta chunk "extractor" records its kind and D.
void save_extractor(const FeatureExtractor& extractor, const std::filesystem::path& path);
std::unique_ptr<FeatureExtractor> load_extractor(const std::filesystem::path& path);
std::unique_ptr<FeatureExtractor> restore_extractor(const nn::Checkpoint& ckpt);

}  // namespace cdrs::feature
