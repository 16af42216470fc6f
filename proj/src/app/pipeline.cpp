#include "cdrs/app/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "cdrs/error.hpp"
#include "cdrs/feature/classifier.hpp"
#include "cdrs/feature/sae.hpp"
#include "cdrs/sampler/sampler.hpp"
#include "cdrs/seed.hpp"

namespace cdrs::app {

namespace fs = std::filesystem;

namespace {

std::string label_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "label_%03zu.csv", index);
  return buf;
}

nlohmann::json zeta_json(double zeta) {
  return std::isfinite(zeta) ? nlohmann::json(zeta) : nlohmann::json();
}

bool same_zeta(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

}  // namespace

LabeledData draw_real(const synthetic::ConditionalGaussianTask& task,
                      const std::vector<double>& labels, int per_label, std::uint64_t seed,
                      const std::string& component) {
  require(per_label >= 1, "draw_real: per_label must be positive");
  LabeledData out;
  const auto n = static_cast<Eigen::Index>(labels.size()) * per_label;
  out.x.resize(task.dim(), n);
  out.labels.reserve(static_cast<std::size_t>(n));
  Eigen::Index col = 0;
  for (double y : labels) {
    Rng rng(derive_seed(seed, component, y));
    const SampleBatch batch = task.sample_real(y, static_cast<std::size_t>(per_label), rng);
    out.x.middleCols(col, per_label) = batch.x;
    col += per_label;
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(per_label), y);
  }
  return out;
}

ExtractorTraining train_extractor(const ExperimentConfig& cfg,
                                  const synthetic::ConditionalGaussianTask& task) {
  ExtractorTraining out;
  const auto& e = cfg.extractor;
  if (e.kind == "identity") {
    out.extractor = std::make_unique<feature::IdentityExtractor>(task.dim());
    return out;
  }
  const LabeledData data = draw_real(task, task.training_labels(), e.train_samples_per_label,
                                     cfg.seed, "extractor.data");
  if (e.kind == "sae") {
    std::vector<double> positions;
    positions.reserve(data.labels.size());
    for (double y : data.labels) positions.push_back(task.position(y));
    auto sae_cfg = e.sae;
    sae_cfg.seed = derive_seed(cfg.seed, "extractor.sae");
    auto trained = feature::train_sae(data.x, positions, sae_cfg);
    out.loss_history = std::move(trained.loss_history);
    out.extractor = std::make_unique<feature::SparseAutoencoder>(std::move(trained.model));
    return out;
  }
  std::vector<int> classes;
  classes.reserve(data.labels.size());
  for (double y : data.labels) classes.push_back(static_cast<int>(y));
  auto clf_cfg = e.classifier;
  clf_cfg.seed = derive_seed(cfg.seed, "extractor.classifier");
  auto trained = feature::train_classifier(data.x, classes, cfg.task.num_classes, clf_cfg);
  out.loss_history = std::move(trained.loss_history);
  out.extractor = std::make_unique<feature::ClassifierExtractor>(std::move(trained.model));
  return out;
}

std::unique_ptr<feature::FeatureExtractor> obtain_extractor(const ExperimentConfig& cfg,
                                                            const fs::path& path) {
  if (cfg.extractor.kind == "identity") {
    return std::make_unique<feature::IdentityExtractor>(cfg.task.dim());
  }
  if (!fs::exists(path)) {
    throw ArtifactError("missing extractor checkpoint '" + path.string() +
                        "' (run train-sae first)");
  }
  std::unique_ptr<feature::FeatureExtractor> extractor;
  try {
    extractor = feature::load_extractor(path);
  } catch (const FormatError& e) {
    throw ArtifactError("extractor checkpoint '" + path.string() + "': " + e.what());
  }
  if (extractor->kind() != cfg.extractor.kind) {
    throw ArtifactError("extractor checkpoint holds '" + extractor->kind() +
                        "' but the config asks for '" + cfg.extractor.kind + "'");
  }
  if (extractor->input_dim() != cfg.task.dim()) {
    throw ArtifactError("extractor input dimension " + std::to_string(extractor->input_dim()) +
                        " does not match task dimension " + std::to_string(cfg.task.dim()));
  }
  return extractor;
}

GeneratorFakeSource::GeneratorFakeSource(const ConditionalGenerator& generator,
                                         const feature::FeatureExtractor& extractor)
    : generator_(generator), extractor_(extractor) {
  require(generator_.dim() == extractor_.input_dim(),
          "GeneratorFakeSource: generator and extractor dimensions differ");
}

Matrix GeneratorFakeSource::draw(std::span<const double> labels, Rng& rng) {
  std::map<double, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  Matrix x(generator_.dim(), static_cast<Eigen::Index>(labels.size()));
  for (const auto& [y, slots] : by_label) {
    const SampleBatch batch = generator_.draw(y, slots.size(), rng);
    for (std::size_t j = 0; j < slots.size(); ++j) {
      x.col(static_cast<Eigen::Index>(slots[j])) = batch.x.col(static_cast<Eigen::Index>(j));
    }
  }
  return extractor_.extract(x);
}

FilteredFakeSource::FilteredFakeSource(const ConditionalGenerator& generator,
                                       const feature::FeatureExtractor& extractor,
                                       const feature::LabelPredictor& predictor, double zeta,
                                       std::size_t pool_size)
    : generator_(generator),
      extractor_(extractor),
      predictor_(predictor),
      zeta_(zeta),
      pool_size_(pool_size) {
  require(zeta_ >= 0.0 && std::isfinite(zeta_), "FilteredFakeSource: zeta must be finite");
  require(pool_size_ >= 1, "FilteredFakeSource: pool size must be positive");
}

void FilteredFakeSource::refill(double y, Pool& pool, Rng& rng) {
  const sampler::VicinityFilter filter{zeta_, &predictor_};
  SampleBatch kept;
  std::size_t attempts = 0;
  while (kept.size() < pool_size_) {
    const SampleBatch raw = generator_.draw(y, pool_size_, rng);
    raw_draws_ += raw.size();
    kept.append(sampler::filter_vicinity(raw, filter, y));
    if (++attempts > 1000 && kept.size() == 0) {
      throw NumericalFailure("FilteredFakeSource: no generator draw passes the filter at label " +
                             std::to_string(y));
    }
  }
  pool.features = extractor_.extract(kept.x);
  pool.next = 0;
}

Matrix FilteredFakeSource::draw(std::span<const double> labels, Rng& rng) {
  Matrix out(extractor_.input_dim(), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Pool& pool = pools_[labels[i]];
    if (pool.next >= pool.features.cols()) refill(labels[i], pool, rng);
    out.col(static_cast<Eigen::Index>(i)) = pool.features.col(pool.next++);
  }
  return out;
}

RatioTraining train_ratio_model(const ExperimentConfig& cfg,
                                const synthetic::ConditionalGaussianTask& task,
                                const feature::FeatureExtractor& extractor, double zeta) {
  const std::vector<double> labels = task.training_labels();
  const LabeledData real =
      draw_real(task, labels, cfg.real_samples_per_label, cfg.seed, "real.train");
  const cdre::FeatureSet real_set{extractor.extract(real.x), real.labels};

  cdre::RatioModelSpec spec;
  spec.feature_dim = extractor.input_dim();
  spec.embedding = task.kind() == synthetic::LabelKind::kClass
                       ? cdre::ConditionEmbedding::one_hot(cfg.task.num_classes)
                       : cdre::ConditionEmbedding::continuous_octaves(cfg.ratio_model.embed_dim);
  spec.hidden = cfg.ratio_model.hidden;
  spec.norm_groups = cfg.ratio_model.norm_groups;
  spec.dropout_rate = cfg.ratio_model.dropout_rate;
  spec.output_bias = cfg.ratio_model.output_bias;
  Rng init_rng(derive_seed(cfg.seed, "cdre.init"));
  cdre::RatioModel model = cdre::RatioModel::create(spec, init_rng);
  if (task.kind() == synthetic::LabelKind::kContinuous) {
    model.set_normalizer(cdre::LabelNormalizer::fit(labels));
  }

  const synthetic::FakeGenerator generator(task);
  std::unique_ptr<cdre::FakeFeatureSource> fake;
  if (std::isfinite(zeta)) {
    const auto* predictor = dynamic_cast<const feature::LabelPredictor*>(&extractor);
    require(predictor != nullptr, "train_ratio_model: filtering needs a label-predicting extractor");
    fake = std::make_unique<FilteredFakeSource>(
        generator, extractor, *predictor, zeta,
        static_cast<std::size_t>(cfg.sampler.pool_factor) *
            static_cast<std::size_t>(cfg.cdre.batch_size));
  } else {
    fake = std::make_unique<GeneratorFakeSource>(generator, extractor);
  }

  auto train_cfg = cfg.cdre;
  train_cfg.seed = derive_seed(cfg.seed, "cdre.train");
  auto history = cdre::train_cdre(real_set, *fake, model, train_cfg);
  model.set_trained_zeta(zeta);
  return {std::move(model), std::move(history)};
}

MethodSamples sample_baseline(const ExperimentConfig& cfg,
                              const synthetic::ConditionalGaussianTask& task,
                              const std::vector<double>& labels) {
  MethodSamples out;
  out.method = "baseline";
  out.zeta = sampler::kFilterDisabled;
  out.labels = labels;
  out.summary = {{"method", "baseline"}, {"zeta", nullptr}, {"n_target", cfg.n_target},
                 {"labels", nlohmann::json::array()}};
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double y = labels[k];
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(cfg.seed, "baseline", y));
    const SampleBatch batch = task.sample_fake(y, static_cast<std::size_t>(cfg.n_target), rng);
    SampleTable t;
    t.x = batch.x;
    t.labels.assign(batch.size(), y);
    for (std::size_t i = 0; i < batch.size(); ++i) t.acceptance_index.push_back(i + 1);
    t.actual_labels = batch.actual_labels;
    t.attributes = batch.attributes;
    out.per_label.push_back(std::move(t));
    out.acceptance_rates.push_back(1.0);
    out.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    out.summary["labels"].push_back({{"label", y},
                                     {"file", label_file_name(k)},
                                     {"accepted", batch.size()},
                                     {"proposed", batch.size()},
                                     {"acceptance_rate", 1.0},
                                     {"status", "ok"}});
  }
  return out;
}

MethodSamples sample_cdr_rs(const ExperimentConfig& cfg,
                            const synthetic::ConditionalGaussianTask& task,
                            const cdre::RatioModel& model,
                            const feature::FeatureExtractor& extractor, double zeta,
                            const std::vector<double>& labels, const std::string& method) {
  if (!same_zeta(model.trained_zeta(), zeta)) {
    auto text = [](double z) { return std::isfinite(z) ? std::to_string(z) : std::string("off"); };
    throw ArtifactError("ratio model was trained with filter zeta " +
                        text(model.trained_zeta()) + " but sampling uses " + text(zeta));
  }
  if (model.feature_dim() != extractor.input_dim()) {
    throw ArtifactError("ratio model feature_dim " + std::to_string(model.feature_dim()) +
                        " does not match the extractor dimension " +
                        std::to_string(extractor.input_dim()));
  }
  const auto* predictor = dynamic_cast<const feature::LabelPredictor*>(&extractor);
  if (std::isfinite(zeta) && predictor == nullptr) {
    throw ArtifactError("vicinity filtering needs a label-predicting extractor");
  }

  const synthetic::FakeGenerator generator(task);
  sampler::SubsamplingPipeline pipeline;
  pipeline.generator = &generator;
  pipeline.extractor = &extractor;
  pipeline.model = &model;
  pipeline.filter = {zeta, predictor};
  pipeline.settings = cfg.sampler.settings;
  pipeline.master_seed = derive_seed(cfg.seed, "sampler");
  const auto outcomes = sampler::run_conditional_subsampling(
      labels, static_cast<std::size_t>(cfg.n_target), pipeline);

  MethodSamples out;
  out.method = method;
  out.zeta = zeta;
  out.labels = labels;
  out.summary = {{"method", method}, {"zeta", zeta_json(zeta)}, {"n_target", cfg.n_target},
                 {"labels", nlohmann::json::array()}};
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    SampleTable t;
    t.x = Matrix(task.dim(), 0);
    t.has_predicted = std::isfinite(zeta);
    t.has_ratio = true;
    if (o.accepted) {
      const auto& a = *o.accepted;
      t.x = a.samples.x;
      t.labels.assign(a.samples.size(), o.label);
      t.predicted = a.predicted;
      t.ratios = a.ratios;
      t.acceptance_index = a.acceptance_index;
      t.actual_labels = a.samples.actual_labels;
      t.attributes = a.samples.attributes;
    }
    out.per_label.push_back(std::move(t));
    out.acceptance_rates.push_back(o.session.acceptance_rate());
    out.wall_seconds.push_back(o.wall_seconds);
    nlohmann::json rec{{"label", o.label},
                       {"file", label_file_name(k)},
                       {"accepted", o.session.accepted},
                       {"proposed", o.session.proposed},
                       {"acceptance_rate", o.session.acceptance_rate()},
                       {"m", o.session.m},
                       {"inverse_m", o.session.m > 0.0 ? 1.0 / o.session.m : 0.0},
                       {"burn_in", o.session.burn_in_count},
                       {"generator_draws", o.session.generator_draws},
                       {"m_updates", o.session.m_updates},
                       {"status", o.error.empty() ? "ok" : (o.budget_exhausted ? "budget_exhausted" : "error")}};
    if (!o.error.empty()) {
      rec["error"] = o.error;
      out.failures.push_back("label " + std::to_string(o.label) + ": " + o.error);
    }
    out.summary["labels"].push_back(std::move(rec));
  }
  return out;
}

void write_method_samples(const fs::path& dir, const MethodSamples& samples, bool write_timing) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < samples.per_label.size(); ++k) {
    write_samples_csv(dir / label_file_name(k), samples.per_label[k]);
  }
  write_text_file(dir / "summary.json", samples.summary.dump(2) + "\n");
  if (write_timing) {
    nlohmann::json timing = nlohmann::json::array();
    for (std::size_t k = 0; k < samples.labels.size(); ++k) {
      timing.push_back({{"label", samples.labels[k]}, {"wall_seconds", samples.wall_seconds[k]}});
    }
    write_text_file(dir / "timing.json", timing.dump(2) + "\n");
  }
}

MethodSamples read_method_samples(const fs::path& dir) {
  const fs::path summary_path = dir / "summary.json";
  if (!fs::exists(summary_path)) {
    throw ArtifactError("missing sample summary '" + summary_path.string() + "'");
  }
  MethodSamples out;
  try {
    std::ifstream in(summary_path);
    out.summary = nlohmann::json::parse(in);
    out.method = out.summary.at("method").get<std::string>();
    const auto& z = out.summary.at("zeta");
    out.zeta = z.is_null() ? sampler::kFilterDisabled : z.get<double>();
    for (const auto& rec : out.summary.at("labels")) {
      out.labels.push_back(rec.at("label").get<double>());
      out.acceptance_rates.push_back(rec.at("acceptance_rate").get<double>());
      const fs::path file = dir / rec.at("file").get<std::string>();
      if (!fs::exists(file)) throw ArtifactError("missing sample file '" + file.string() + "'");
      out.per_label.push_back(read_samples_csv(file));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("summary.json", e.what());
  }
  return out;
}

metrics::EvaluationReport evaluate_samples(const ExperimentConfig& cfg,
                                           const synthetic::ConditionalGaussianTask& task,
                                           const MethodSamples& samples) {
  std::vector<metrics::LabelEvaluationInput> inputs;
  for (std::size_t k = 0; k < samples.per_label.size(); ++k) {
    const auto& t = samples.per_label[k];
    const double y = samples.labels[k];
    if (!task.in_label_space(y)) {
      throw SchemaError("label", "label " + std::to_string(y) + " is outside the task's label space");
    }
    if (t.x.rows() != task.dim()) {
      throw SchemaError("f" + std::to_string(std::min<Eigen::Index>(t.x.rows(), task.dim())),
                        "feature count does not match the task dimension");
    }
    for (double v : t.labels) {
      if (v != y) throw SchemaError("label", "row label differs from the summary's label");
    }
    for (int a : t.attributes) {
      if (a >= task.num_attributes()) throw SchemaError("attribute", "attribute id out of range");
    }
    metrics::LabelEvaluationInput in;
    in.label = y;
    in.fake = t.x;
    in.real = draw_real(task, {y}, cfg.eval_real_samples_per_label, cfg.seed, "real.eval").x;
    in.attributes = t.attributes;
    in.observed_labels = t.actual_labels;
    in.acceptance_rate = samples.acceptance_rates[k];
    inputs.push_back(std::move(in));
  }
  return metrics::evaluate_labels(inputs, task.num_attributes());
}

}  // namespace cdrs::app
