#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdrs/cdre/ratio_model.hpp"

namespace cdrs::cdre {

struct CdreTrainConfig {
  double lambda = 1e-2;
  double lr = 1e-4;
  std::vector<int> lr_decay_epochs{80, 150};
  double lr_decay_factor = 0.1;
  int batch_size = 256;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// Real training pairs: one feature column per label.
struct FeatureSet {
  Matrix features;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
};

/// Produces fake features conditional on the requested labels, one column each.
class FakeFeatureSource {
 public:
  virtual ~FakeFeatureSource() = default;
  virtual int dim() const = 0;
  virtual Matrix draw(std::span<const double> labels, Rng& rng) = 0;
};

struct LossHistory {
  std::vector<int> epoch;  // per iteration
  std::vector<double> objective;
  std::vector<double> csp;
  std::vector<double> penalty;

  std::size_t size() const { return objective.size(); }
};

/// Minibatch training of `model` on the penalized cSP objective with Adam.
/// Each iteration pairs m real samples with m fake samples drawn at the same
/// labels. One epoch is ceil(N_r / m) iterations.
LossHistory train_cdre(const FeatureSet& real, FakeFeatureSource& fake, RatioModel& model,
                       const CdreTrainConfig& cfg);

/// Value and parameter gradients of the penalized objective on fixed batches.
struct ObjectiveGradient {
  double value = 0.0;
  double csp = 0.0;
  double penalty = 0.0;
  nn::Gradients grads;
};
ObjectiveGradient objective_gradient(const RatioModel& model, const Matrix& fake_features,
                                     std::span<const double> fake_labels,
                                     const Matrix& real_features,
                                     std::span<const double> real_labels, double lambda,
                                     nn::Mode mode, Rng* rng);

}  // namespace cdrs::cdre
