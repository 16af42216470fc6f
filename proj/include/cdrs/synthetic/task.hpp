#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "cdrs/generator.hpp"
#include "cdrs/nn/types.hpp"

namespace cdrs::synthetic {

enum class LabelKind { kClass, kContinuous };

/// Real and fake conditionals are Gaussian mixtures over A attributes:
///   real:  x = base + slope * t  + offset_a + N(0, real_cov),          a ~ real_weights
///   fake:  x = base + slope * t' + offset_a + fake_shift + N(0, fake_cov), a ~ fake_weights
/// where t in [0, 1] is the label position (class k sits at k / (C - 1)) and
/// t' = clip(t + N(0, label_noise_sd^2), 0, 1) for continuous tasks.
struct TaskSpec {
  LabelKind kind = LabelKind::kClass;
  int num_classes = 10;
  int num_train_labels = 60;
  Vector base;
  Vector slope;
  Vector fake_shift;
  Matrix real_cov;
  Matrix fake_cov;
  Matrix attribute_offsets;  // dim x A
  Vector real_weights;
  Vector fake_weights;
  double label_noise_sd = 0.0;

  int dim() const { return static_cast<int>(base.size()); }
  int num_attributes() const { return static_cast<int>(real_weights.size()); }

  nlohmann::json to_json() const;
  static TaskSpec from_json(const nlohmann::json& j);
};

class ConditionalGaussianTask {
 public:
  explicit ConditionalGaussianTask(TaskSpec spec);

  /// dim 2, ten class labels, five attributes skewed on the fake side.
  static TaskSpec default_class_spec();
  /// dim 2, sixty training labels on [0, 1], label axis along the second
  /// coordinate, fake labels blurred by noise of sd 0.1.
  static TaskSpec default_continuous_spec();

  const TaskSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim(); }
  int num_attributes() const { return spec_.num_attributes(); }
  LabelKind kind() const { return spec_.kind; }

  bool in_label_space(double y) const;
  /// Position t in [0, 1] of label y.
  double position(double y) const;
  /// Class indices, or the continuous training grid.
  std::vector<double> training_labels() const;

  Vector real_mean(double y) const;  // mixture mean
  Vector fake_mean(double y) const;  // mixture mean before label noise

  SampleBatch sample_real(double y, std::size_t n, Rng& rng) const;
  SampleBatch sample_fake(double y, std::size_t n, Rng& rng) const;

  double log_real_density(const Vector& h, double y) const;
  double log_fake_density(const Vector& h, double y) const;
  double true_ratio(const Vector& h, double y) const;

 private:
  struct Gaussian {
    Matrix chol_lower;  // L with L L^T = cov
    Matrix precision;
    double log_norm = 0.0;  // -0.5 (d log 2 pi + log det cov)
  };
  static Gaussian factor(const Matrix& cov, const char* which);
  SampleBatch sample(double y, std::size_t n, Rng& rng, bool fake) const;
  double log_gaussian(const Gaussian& g, const Vector& diff) const;
  double log_fake_component(const Vector& h, double t, int a) const;

  TaskSpec spec_;
  Gaussian real_;
  Gaussian fake_;
};

class RealGenerator : public ConditionalGenerator {
 public:
  explicit RealGenerator(const ConditionalGaussianTask& task) : task_(task) {}
  int dim() const override { return task_.dim(); }
  SampleBatch draw(double label, std::size_t n, Rng& rng) const override {
    return task_.sample_real(label, n, rng);
  }

 private:
  const ConditionalGaussianTask& task_;
};

/// The stand-in for a trained conditional generator.
class FakeGenerator : public ConditionalGenerator {
 public:
  explicit FakeGenerator(const ConditionalGaussianTask& task) : task_(task) {}
  int dim() const override { return task_.dim(); }
  SampleBatch draw(double label, std::size_t n, Rng& rng) const override {
    return task_.sample_fake(label, n, rng);
  }

 private:
  const ConditionalGaussianTask& task_;
};

}  // namespace cdrs::synthetic
