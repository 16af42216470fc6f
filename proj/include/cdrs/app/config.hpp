#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrs/cdre/train.hpp"
#include "cdrs/feature/classifier.hpp"
#include "cdrs/feature/sae.hpp"
#include "cdrs/sampler/sampler.hpp"
#include "cdrs/synthetic/task.hpp"

namespace cdrs::app {

/// Invalid or missing configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct ExtractorConfig {
  std::string kind = "identity";  // identity | sae | classifier
  int train_samples_per_label = 500;
  feature::SaeTrainConfig sae;
  feature::ClassifierTrainConfig classifier;
};

struct RatioModelConfig {
  std::vector<int> hidden{256, 128, 64, 32};
  int norm_groups = 8;
  double dropout_rate = 0.5;
  double output_bias = 1.0;
  int embed_dim = 16;  // continuous tasks only
};

struct FilterConfig {
  bool enabled = false;
  std::optional<double> zeta;  // overrides the rule of thumb
  double m_kappa = 1.0;
};

struct SamplerConfig {
  sampler::SamplerSettings settings;
  FilterConfig filter;
  int pool_factor = 50;  // filtered training pool per label, in batches
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  synthetic::TaskSpec task;
  ExtractorConfig extractor;
  RatioModelConfig ratio_model;
  cdre::CdreTrainConfig cdre;
  int real_samples_per_label = 1000;
  SamplerConfig sampler;
  std::vector<double> labels_of_interest;  // empty: every training label
  int n_target = 500;
  int eval_real_samples_per_label = 5000;

  /// Labels to sample and evaluate.
  std::vector<double> resolved_labels() const;
  /// Filter half-width for this run; infinity when the filter is off.
  double resolved_zeta() const;

  nlohmann::json to_json() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Bundled benchmark presets.
std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

}  // namespace cdrs::app
