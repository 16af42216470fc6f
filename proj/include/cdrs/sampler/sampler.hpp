#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdrs/cdre/ratio_model.hpp"
#include "cdrs/feature/extractor.hpp"
#include "cdrs/generator.hpp"

namespace cdrs::sampler {

inline constexpr double kFilterDisabled = std::numeric_limits<double>::infinity();

/// Keeps samples whose predicted label lies in [y - zeta, y + zeta].
/// zeta = infinity disables the filter.
struct VicinityFilter {
  double zeta = kFilterDisabled;
  const feature::LabelPredictor* predictor = nullptr;

  bool enabled() const { return zeta != kFilterDisabled; }
  bool passes(double predicted, double y) const {
    return !enabled() || std::abs(predicted - y) <= zeta;
  }
};

/// Indices (in order) of the predicted labels that pass the filter at y.
std::vector<std::size_t> filter_vicinity(std::span<const double> predicted,
                                         const VicinityFilter& filter, double y);

/// Order-preserving filtered subset of `samples`; `predicted_out` receives the
/// predicted labels of the survivors when the filter is enabled.
SampleBatch filter_vicinity(const SampleBatch& samples, const VicinityFilter& filter, double y,
                            std::vector<double>* predicted_out = nullptr);

/// Largest gap between consecutive sorted distinct labels.
double kappa_base(std::span<const double> labels);
/// 3 * m_kappa * kappa_base(labels).
double default_zeta(std::span<const double> labels, double m_kappa);

struct SamplerSettings {
  std::size_t burn_in = 10'000;
  double budget_factor = 1000.0;  // proposal budget = budget_factor * n_target
  bool frozen_m = false;          // keep the burn-in M; acceptance p is clamped at 1
  std::size_t chunk = 512;        // proposals scored per batch
};

struct SamplerSession {
  double label = 0.0;
  double m = 0.0;  // running maximum ratio
  std::size_t burn_in_count = 0;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  std::size_t generator_draws = 0;  // before filtering, burn-in included
  std::size_t m_updates = 0;        // proposals that raised M after burn-in
  std::size_t clamped = 0;          // frozen mode: proposals with ratio > M

  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

struct AcceptedSamples {
  SampleBatch samples;
  std::vector<double> ratios;
  std::vector<double> predicted;  // empty unless the filter is enabled
  std::vector<std::size_t> acceptance_index;  // 1-based proposal number within the session
};

/// Proposal distribution at one label: generator draws, optionally vicinity
/// filtered, scored by the ratio model in feature space.
class ProposalStream {
 public:
  ProposalStream(const ConditionalGenerator& generator, const feature::FeatureExtractor& extractor,
                 const cdre::RatioScorer& model, const VicinityFilter& filter, double y,
                 std::size_t chunk);

  struct Chunk {
    SampleBatch samples;
    Vector ratios;
    std::vector<double> predicted;
  };
  /// Next nonempty scored chunk; throws BudgetExhausted after `max_draws` raw draws.
  Chunk next(Rng& rng, std::size_t max_draws);
  std::size_t draws() const { return draws_; }

 private:
  const ConditionalGenerator& generator_;
  const feature::FeatureExtractor& extractor_;
  const cdre::RatioScorer& model_;
  VicinityFilter filter_;
  double y_;
  std::size_t chunk_;
  std::size_t draws_ = 0;
};

/// Maximum ratio over n_prime proposals at y; starts a session.
SamplerSession burn_in_max(const cdre::RatioScorer& model, const ConditionalGenerator& generator,
                           const feature::FeatureExtractor& extractor, double y,
                           std::size_t n_prime, Rng& rng, const VicinityFilter& filter = {},
                           const SamplerSettings& settings = {});

/// Draw -> score -> M = max(M, ratio) -> accept with probability ratio / M,
/// until n_target acceptances. Burn-in draws are not reused.
AcceptedSamples rejection_sample(const ConditionalGenerator& generator,
                                 const cdre::RatioScorer& model,
                                 const feature::FeatureExtractor& extractor, double y,
                                 std::size_t n_target, SamplerSession& session, Rng& rng,
                                 const VicinityFilter& filter = {},
                                 const SamplerSettings& settings = {});

struct LabelOutcome {
  double label = 0.0;
  SamplerSession session;
  std::optional<AcceptedSamples> accepted;
  std::string error;  // empty on success
  bool budget_exhausted = false;
  double wall_seconds = 0.0;
};

struct SubsamplingPipeline {
  const ConditionalGenerator* generator = nullptr;
  const feature::FeatureExtractor* extractor = nullptr;
  const cdre::RatioScorer* model = nullptr;
  VicinityFilter filter;
  SamplerSettings settings;
  std::uint64_t master_seed = 0;
};

/// One independent session per label, seeded by derive_seed(master, "sampler", label).
/// Labels run concurrently; a failing label is reported without stopping the others.
std::vector<LabelOutcome> run_conditional_subsampling(std::span<const double> labels,
                                                      std::size_t n_target,
                                                      const SubsamplingPipeline& pipeline);

}  // namespace cdrs::sampler
