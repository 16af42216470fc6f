#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrs/app/config.hpp"
#include "cdrs/app/csv.hpp"
#include "cdrs/cdre/ratio_model.hpp"
#include "cdrs/cdre/train.hpp"
#include "cdrs/feature/extractor.hpp"
#include "cdrs/metrics/metrics.hpp"
#include "cdrs/synthetic/task.hpp"

namespace cdrs::app {

/// A required artifact is missing or does not match the configuration.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Some labels ran out of proposal budget; the other labels' outputs were still written.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path extractor() const { return root / "extractor.ckpt"; }
  std::filesystem::path extractor_loss() const { return root / "extractor_loss.csv"; }
  std::filesystem::path ratio_model() const { return root / "ratio_model.ckpt"; }
  std::filesystem::path cdre_loss() const { return root / "cdre_loss.csv"; }
  std::filesystem::path samples(const std::string& method) const {
    return root / "samples" / method;
  }
  std::filesystem::path evaluation() const { return root / "evaluation"; }
};

struct LabeledData {
  Matrix x;
  std::vector<double> labels;
};

/// `per_label` real draws at every label; each label uses its own derived stream.
LabeledData draw_real(const synthetic::ConditionalGaussianTask& task,
                      const std::vector<double>& labels, int per_label, std::uint64_t seed,
                      const std::string& component);

struct ExtractorTraining {
  std::unique_ptr<feature::FeatureExtractor> extractor;
  std::vector<double> loss_history;
};
ExtractorTraining train_extractor(const ExperimentConfig& cfg,
                                  const synthetic::ConditionalGaussianTask& task);

/// The identity extractor is built in place; trained kinds load from `path`.
std::unique_ptr<feature::FeatureExtractor> obtain_extractor(const ExperimentConfig& cfg,
                                                            const std::filesystem::path& path);

/// Fresh generator draws at the requested labels, mapped to feature space.
class GeneratorFakeSource : public cdre::FakeFeatureSource {
 public:
  GeneratorFakeSource(const ConditionalGenerator& generator,
                      const feature::FeatureExtractor& extractor);
  int dim() const override { return extractor_.input_dim(); }
  Matrix draw(std::span<const double> labels, Rng& rng) override;

 private:
  const ConditionalGenerator& generator_;
  const feature::FeatureExtractor& extractor_;
};

/// Vicinity-filtered generator stream, buffered per label in pools of
/// `pool_size` survivors that refill when drained.
class FilteredFakeSource : public cdre::FakeFeatureSource {
 public:
  FilteredFakeSource(const ConditionalGenerator& generator,
                     const feature::FeatureExtractor& extractor,
                     const feature::LabelPredictor& predictor, double zeta,
                     std::size_t pool_size);
  int dim() const override { return extractor_.input_dim(); }
  Matrix draw(std::span<const double> labels, Rng& rng) override;
  std::size_t raw_draws() const { return raw_draws_; }

 private:
  struct Pool {
    Matrix features;
    Eigen::Index next = 0;
  };
  void refill(double y, Pool& pool, Rng& rng);

  const ConditionalGenerator& generator_;
  const feature::FeatureExtractor& extractor_;
  const feature::LabelPredictor& predictor_;
  double zeta_;
  std::size_t pool_size_;
  std::map<double, Pool> pools_;
  std::size_t raw_draws_ = 0;
};

struct RatioTraining {
  cdre::RatioModel model;
  cdre::LossHistory history;
};

/// Trains a ratio model on real features against the (optionally filtered) fake stream.
/// `zeta` = infinity trains on the unfiltered stream.
RatioTraining train_ratio_model(const ExperimentConfig& cfg,
                                const synthetic::ConditionalGaussianTask& task,
                                const feature::FeatureExtractor& extractor, double zeta);

struct MethodSamples {
  std::string method;
  double zeta = 0.0;
  std::vector<SampleTable> per_label;
  std::vector<double> labels;
  std::vector<double> acceptance_rates;
  nlohmann::json summary;  // per-label session statistics
  std::vector<std::string> failures;
  std::vector<double> wall_seconds;  // per label; never written unless requested
};

MethodSamples sample_baseline(const ExperimentConfig& cfg,
                              const synthetic::ConditionalGaussianTask& task,
                              const std::vector<double>& labels);

MethodSamples sample_cdr_rs(const ExperimentConfig& cfg,
                            const synthetic::ConditionalGaussianTask& task,
                            const cdre::RatioModel& model,
                            const feature::FeatureExtractor& extractor, double zeta,
                            const std::vector<double>& labels, const std::string& method);

/// label_<k>.csv per label plus summary.json; timing.json only when `write_timing`.
void write_method_samples(const std::filesystem::path& dir, const MethodSamples& samples,
                          bool write_timing);
MethodSamples read_method_samples(const std::filesystem::path& dir);

/// Scores samples against fresh real draws at each label (FID in sample space,
/// Diversity over attribute ids, Label Score from recorded actual labels).
metrics::EvaluationReport evaluate_samples(const ExperimentConfig& cfg,
                                           const synthetic::ConditionalGaussianTask& task,
                                           const MethodSamples& samples);

}  // namespace cdrs::app
