#include "cdrs/sampler/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "cdrs/error.hpp"
#include "cdrs/seed.hpp"

namespace cdrs::sampler {

std::vector<std::size_t> filter_vicinity(std::span<const double> predicted,
                                         const VicinityFilter& filter, double y) {
  std::vector<std::size_t> keep;
  keep.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (filter.passes(predicted[i], y)) keep.push_back(i);
  }
  return keep;
}

SampleBatch filter_vicinity(const SampleBatch& samples, const VicinityFilter& filter, double y,
                            std::vector<double>* predicted_out) {
  if (!filter.enabled()) {
    if (predicted_out != nullptr) predicted_out->clear();
    return samples;
  }
  require(filter.predictor != nullptr, "filter_vicinity: enabled filter needs a predictor");
  const Vector predicted = samples.size() == 0 ? Vector() : filter.predictor->predict_labels(samples.x);
  const std::span<const double> view(predicted.data(), static_cast<std::size_t>(predicted.size()));
  const auto keep = filter_vicinity(view, filter, y);
  if (predicted_out != nullptr) {
    predicted_out->clear();
    for (std::size_t i : keep) predicted_out->push_back(view[i]);
  }
  return samples.subset(keep);
}

double kappa_base(std::span<const double> labels) {
  std::vector<double> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  require(sorted.size() >= 2, "kappa_base: at least two distinct labels required");
  double gap = 0.0;
  for (std::size_t i = 1; i < sorted.size(); ++i) gap = std::max(gap, sorted[i] - sorted[i - 1]);
  return gap;
}

double default_zeta(std::span<const double> labels, double m_kappa) {
  require(m_kappa > 0.0, "default_zeta: m_kappa must be positive");
  return 3.0 * m_kappa * kappa_base(labels);
}

ProposalStream::ProposalStream(const ConditionalGenerator& generator,
                               const feature::FeatureExtractor& extractor,
                               const cdre::RatioScorer& model, const VicinityFilter& filter,
                               double y, std::size_t chunk)
    : generator_(generator),
      extractor_(extractor),
      model_(model),
      filter_(filter),
      y_(y),
      chunk_(chunk) {
  require(chunk_ >= 1, "ProposalStream: chunk must be positive");
  require(extractor_.input_dim() == generator_.dim(),
          "ProposalStream: extractor input dimension does not match the generator");
  require(model_.feature_dim() == extractor_.input_dim(),
          "ProposalStream: ratio model feature_dim does not match the extractor");
  require(!filter_.enabled() || filter_.predictor != nullptr,
          "ProposalStream: enabled filter needs a predictor");
}

ProposalStream::Chunk ProposalStream::next(Rng& rng, std::size_t max_draws) {
  Chunk out;
  while (out.samples.size() == 0) {
    if (draws_ >= max_draws) {
      throw BudgetExhausted("proposal budget of " + std::to_string(max_draws) +
                                " generator draws exhausted",
                            0.0);
    }
    const SampleBatch raw = generator_.draw(y_, chunk_, rng);
    draws_ += raw.size();
    out.samples = filter_vicinity(raw, filter_, y_, &out.predicted);
  }
  out.ratios = model_.score_batch(extractor_.extract(out.samples.x), y_);
  return out;
}

SamplerSession burn_in_max(const cdre::RatioScorer& model, const ConditionalGenerator& generator,
                           const feature::FeatureExtractor& extractor, double y,
                           std::size_t n_prime, Rng& rng, const VicinityFilter& filter,
                           const SamplerSettings& settings) {
  require(n_prime >= 1, "burn_in_max: n_prime must be at least 1");
  ProposalStream stream(generator, extractor, model, filter, y, settings.chunk);
  const auto max_draws =
      static_cast<std::size_t>(std::ceil(settings.budget_factor * static_cast<double>(n_prime)));
  SamplerSession session;
  session.label = y;
  session.burn_in_count = n_prime;
  std::size_t seen = 0;
  while (seen < n_prime) {
    const auto chunk = stream.next(rng, max_draws);
    const std::size_t take = std::min<std::size_t>(n_prime - seen, chunk.samples.size());
    session.m = std::max(session.m, chunk.ratios.head(static_cast<Eigen::Index>(take)).maxCoeff());
    seen += take;
  }
  session.generator_draws = stream.draws();
  if (!(session.m > 0.0)) {
    throw DegenerateModel("burn-in at label " + std::to_string(y) +
                          ": every ratio is zero, rejection sampling cannot accept");
  }
  return session;
}

AcceptedSamples rejection_sample(const ConditionalGenerator& generator,
                                 const cdre::RatioScorer& model,
                                 const feature::FeatureExtractor& extractor, double y,
                                 std::size_t n_target, SamplerSession& session, Rng& rng,
                                 const VicinityFilter& filter, const SamplerSettings& settings) {
  require(n_target >= 1, "rejection_sample: n_target must be at least 1");
  require(session.m > 0.0, "rejection_sample: session has no burn-in estimate of M");
  require(session.label == y, "rejection_sample: session belongs to another label");
  ProposalStream stream(generator, extractor, model, filter, y, settings.chunk);
  const auto max_draws =
      static_cast<std::size_t>(std::ceil(settings.budget_factor * static_cast<double>(n_target)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  AcceptedSamples out;
  std::vector<std::size_t> keep;
  const std::size_t start_draws = session.generator_draws;
  while (out.acceptance_index.size() < n_target) {
    ProposalStream::Chunk chunk;
    try {
      chunk = stream.next(rng, max_draws);
    } catch (const BudgetExhausted& e) {
      session.generator_draws = start_draws + stream.draws();
      throw BudgetExhausted("label " + std::to_string(y) + ": " + e.what() + " after " +
                                std::to_string(out.acceptance_index.size()) + " of " +
                                std::to_string(n_target) + " acceptances",
                            session.acceptance_rate());
    }
    keep.clear();
    for (std::size_t i = 0; i < chunk.samples.size() && out.acceptance_index.size() < n_target;
         ++i) {
      const double ratio = chunk.ratios(static_cast<Eigen::Index>(i));
      ++session.proposed;
      double p = 0.0;
      if (settings.frozen_m) {
        if (ratio > session.m) ++session.clamped;
        p = std::min(1.0, ratio / session.m);
      } else {
        if (ratio > session.m) {
          session.m = ratio;
          ++session.m_updates;
        }
        p = ratio / session.m;
      }
      if (!(p >= 0.0 && p <= 1.0)) {
        throw NumericalFailure("rejection_sample: acceptance probability " + std::to_string(p) +
                               " outside [0, 1]");
      }
      if (unit(rng) < p) {
        ++session.accepted;
        keep.push_back(i);
        out.ratios.push_back(ratio);
        out.acceptance_index.push_back(session.proposed);
        if (filter.enabled()) out.predicted.push_back(chunk.predicted[i]);
      }
    }
    out.samples.append(chunk.samples.subset(keep));
  }
  session.generator_draws = start_draws + stream.draws();
  return out;
}

std::vector<LabelOutcome> run_conditional_subsampling(std::span<const double> labels,
                                                      std::size_t n_target,
                                                      const SubsamplingPipeline& pipeline) {
  require(pipeline.generator != nullptr && pipeline.extractor != nullptr &&
              pipeline.model != nullptr,
          "run_conditional_subsampling: generator, extractor and model are required");
  std::vector<LabelOutcome> outcomes(labels.size());
  const auto count = static_cast<std::int64_t>(labels.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < count; ++k) {
    const double y = labels[static_cast<std::size_t>(k)];
    LabelOutcome& outcome = outcomes[static_cast<std::size_t>(k)];
    outcome.label = y;
    Rng rng(derive_seed(pipeline.master_seed, "sampler", y));
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome.session = burn_in_max(*pipeline.model, *pipeline.generator, *pipeline.extractor, y,
                                    pipeline.settings.burn_in, rng, pipeline.filter,
                                    pipeline.settings);
      outcome.accepted = rejection_sample(*pipeline.generator, *pipeline.model,
                                          *pipeline.extractor, y, n_target, outcome.session, rng,
                                          pipeline.filter, pipeline.settings);
    } catch (const BudgetExhausted& e) {
      outcome.error = e.what();
      outcome.budget_exhausted = true;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  for (const auto& o : outcomes) {
    if (!o.error.empty()) spdlog::warn("label {}: {}", o.label, o.error);
  }
  return outcomes;
}

}  // namespace cdrs::sampler
