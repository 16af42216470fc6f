#include "cdrs/app/commands.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cdrs/app/config.hpp"
#include "cdrs/app/csv.hpp"
#include "cdrs/app/pipeline.hpp"
#include "cdrs/error.hpp"
#include "cdrs/feature/sae.hpp"
#include "cdrs/metrics/report.hpp"
#include "cdrs/numfmt.hpp"

namespace cdrs::app {

namespace fs = std::filesystem;

namespace {

void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("cdrs");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("CDRS_LOG");
  const std::string level = env != nullptr ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

void apply_threads(const CommonOptions& opts) {
  if (opts.threads > 0) omp_set_num_threads(opts.threads);
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  if (opts.config.empty()) throw ConfigError("--config", "a config file is required");
  ExperimentConfig cfg = load_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out.empty()) cfg.output_dir = opts.out;
  return cfg;
}

// Runs `body` and maps the error taxonomy onto exit codes.
int guarded(const std::function<int()>& body) {
  configure_logging();
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const ArtifactError& e) {
    spdlog::error("artifact error: {}", e.what());
    return kExitArtifact;
  } catch (const FormatError& e) {
    spdlog::error("artifact error: {}", e.what());
    return kExitArtifact;
  } catch (const SchemaError& e) {
    spdlog::error("schema error: {}", e.what());
    return kExitSchema;
  } catch (const BudgetError& e) {
    spdlog::error("budget exhausted: {}", e.what());
    return kExitBudget;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}

void write_extractor_artifacts(const ArtifactPaths& paths, const ExtractorTraining& trained) {
  fs::create_directories(paths.root);
  feature::save_extractor(*trained.extractor, paths.extractor());
  std::vector<double> iteration;
  for (std::size_t i = 0; i < trained.loss_history.size(); ++i) iteration.push_back(static_cast<double>(i));
  write_numeric_csv(paths.extractor_loss(), {"iteration", "loss"},
                    {iteration, trained.loss_history});
}

void write_cdre_artifacts(const fs::path& model_path, const fs::path& loss_path,
                          const RatioTraining& trained) {
  fs::create_directories(model_path.parent_path());
  trained.model.save(model_path);
  const auto& h = trained.history;
  std::vector<double> iteration;
  std::vector<double> epoch;
  for (std::size_t i = 0; i < h.size(); ++i) {
    iteration.push_back(static_cast<double>(i));
    epoch.push_back(h.epoch[i]);
  }
  write_numeric_csv(loss_path, {"iteration", "epoch", "objective", "csp", "penalty"},
                    {iteration, epoch, h.objective, h.csp, h.penalty});
}

cdre::RatioModel load_ratio_model(const fs::path& path) {
  if (!fs::exists(path)) {
    throw ArtifactError("missing ratio model checkpoint '" + path.string() +
                        "' (run train-cdre first)");
  }
  try {
    return cdre::RatioModel::load(path);
  } catch (const FormatError& e) {
    throw ArtifactError("ratio model checkpoint '" + path.string() + "': " + e.what());
  }
}

void raise_on_failures(const MethodSamples& samples) {
  if (samples.failures.empty()) return;
  bool budget = false;
  std::string text;
  for (const auto& rec : samples.summary.at("labels")) {
    if (rec.at("status") == "budget_exhausted") budget = true;
  }
  for (const auto& f : samples.failures) text += (text.empty() ? "" : "; ") + f;
  if (budget) throw BudgetError(text);
  throw std::runtime_error(text);
}

void write_report(const fs::path& dir, const std::string& name,
                  const metrics::EvaluationReport& report) {
  std::ofstream csv(dir / (name + "_report.csv"), std::ios::binary | std::ios::trunc);
  metrics::write_report_csv(report, csv);
  write_text_file(dir / (name + "_report.json"), metrics::report_to_json(report).dump(2) + "\n");
}

}  // namespace

int cmd_train_sae(const CommonOptions& opts) {
  return guarded([&] {
    apply_threads(opts);
    const ExperimentConfig cfg = resolve_config(opts);
    const synthetic::ConditionalGaussianTask task(cfg.task);
    const ArtifactPaths paths{cfg.output_dir};
    spdlog::info("train-sae: extractor '{}' into {}", cfg.extractor.kind, paths.root.string());
    write_extractor_artifacts(paths, train_extractor(cfg, task));
    return static_cast<int>(kExitOk);
  });
}

int cmd_train_cdre(const CommonOptions& opts) {
  return guarded([&] {
    apply_threads(opts);
    const ExperimentConfig cfg = resolve_config(opts);
    const synthetic::ConditionalGaussianTask task(cfg.task);
    const ArtifactPaths paths{cfg.output_dir};
    const auto extractor = obtain_extractor(cfg, paths.extractor());
    const double zeta = cfg.resolved_zeta();
    spdlog::info("train-cdre: filter {} into {}", std::isfinite(zeta) ? "on" : "off",
                 paths.root.string());
    write_cdre_artifacts(paths.ratio_model(), paths.cdre_loss(),
                         train_ratio_model(cfg, task, *extractor, zeta));
    return static_cast<int>(kExitOk);
  });
}

int cmd_sample(const CommonOptions& opts, const std::string& method, const std::string& model_path,
               const std::string& extractor_path) {
  return guarded([&] {
    apply_threads(opts);
    const ExperimentConfig cfg = resolve_config(opts);
    const synthetic::ConditionalGaussianTask task(cfg.task);
    const ArtifactPaths paths{cfg.output_dir};
    const auto labels = cfg.resolved_labels();
    MethodSamples samples;
    if (method == "baseline") {
      samples = sample_baseline(cfg, task, labels);
    } else if (method == "cdr-rs") {
      const auto extractor =
          obtain_extractor(cfg, extractor_path.empty() ? paths.extractor() : fs::path(extractor_path));
      const auto model = load_ratio_model(model_path.empty() ? paths.ratio_model() : fs::path(model_path));
      samples = sample_cdr_rs(cfg, task, model, *extractor, cfg.resolved_zeta(), labels, method);
    } else {
      throw ConfigError("--method", "must be baseline or cdr-rs, got '" + method + "'");
    }
    write_method_samples(paths.samples(method), samples, opts.timing);
    spdlog::info("sample: {} labels written to {}", labels.size(),
                 paths.samples(method).string());
    raise_on_failures(samples);
    return static_cast<int>(kExitOk);
  });
}

int cmd_evaluate(const CommonOptions& opts, const std::string& baseline_dir,
                 const std::string& subsampled_dir) {
  return guarded([&] {
    apply_threads(opts);
    const ExperimentConfig cfg = resolve_config(opts);
    const synthetic::ConditionalGaussianTask task(cfg.task);
    const ArtifactPaths paths{cfg.output_dir};
    const fs::path base = baseline_dir.empty() ? paths.samples("baseline") : fs::path(baseline_dir);
    const fs::path sub = subsampled_dir.empty() ? paths.samples("cdr-rs") : fs::path(subsampled_dir);
    const auto baseline = evaluate_samples(cfg, task, read_method_samples(base));
    const auto subsampled = evaluate_samples(cfg, task, read_method_samples(sub));
    const fs::path dir = paths.evaluation();
    fs::create_directories(dir);
    write_report(dir, "baseline", baseline);
    write_report(dir, "subsampled", subsampled);
    std::ofstream table(dir / "comparison.csv", std::ios::binary | std::ios::trunc);
    metrics::write_comparison_csv(baseline, subsampled, table);
    write_text_file(dir / "comparison.json",
                    metrics::comparison_to_json(baseline, subsampled).dump(2) + "\n");
    spdlog::info("evaluate: fid {} -> {}, label score {} -> {}", baseline.fid.mean,
                 subsampled.fid.mean, baseline.label_score.mean, subsampled.label_score.mean);
    return static_cast<int>(kExitOk);
  });
}

int cmd_benchmark(const CommonOptions& opts, const std::string& preset) {
  return guarded([&] {
    apply_threads(opts);
    ExperimentConfig cfg = preset_config(preset);
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.output_dir = opts.out.empty() ? "runs/" + preset : opts.out;
    const synthetic::ConditionalGaussianTask task(cfg.task);
    const ArtifactPaths paths{cfg.output_dir};
    fs::create_directories(paths.root);
    write_text_file(paths.root / "config.json", cfg.to_json().dump(2) + "\n");

    spdlog::info("benchmark {}: training extractor '{}'", preset, cfg.extractor.kind);
    auto trained_extractor = train_extractor(cfg, task);
    write_extractor_artifacts(paths, trained_extractor);
    const auto& extractor = *trained_extractor.extractor;
    const auto labels = cfg.resolved_labels();

    std::vector<std::pair<std::string, double>> methods;
    if (task.kind() == synthetic::LabelKind::kClass) {
      methods.emplace_back("cdr-rs", sampler::kFilterDisabled);
    } else {
      if (cfg.sampler.filter.enabled) methods.emplace_back("cdr-rs-filter", cfg.resolved_zeta());
      methods.emplace_back("cdr-rs-nofilter", sampler::kFilterDisabled);
    }

    std::vector<std::pair<std::string, metrics::EvaluationReport>> reports;
    const MethodSamples baseline = sample_baseline(cfg, task, labels);
    write_method_samples(paths.samples("baseline"), baseline, opts.timing);
    reports.emplace_back("baseline", evaluate_samples(cfg, task, baseline));

    for (const auto& [method, zeta] : methods) {
      spdlog::info("benchmark {}: training ratio model for {}", preset, method);
      const auto trained = train_ratio_model(cfg, task, extractor, zeta);
      write_cdre_artifacts(paths.root / ("ratio_model_" + method + ".ckpt"),
                           paths.root / ("cdre_loss_" + method + ".csv"), trained);
      spdlog::info("benchmark {}: sampling {}", preset, method);
      const MethodSamples samples =
          sample_cdr_rs(cfg, task, trained.model, extractor, zeta, labels, method);
      write_method_samples(paths.samples(method), samples, opts.timing);
      raise_on_failures(samples);
      reports.emplace_back(method, evaluate_samples(cfg, task, samples));
    }

    const fs::path dir = paths.evaluation();
    fs::create_directories(dir);
    nlohmann::json records = nlohmann::json::array();
    std::ofstream table(paths.root / "summary.csv", std::ios::binary | std::ios::trunc);
    table << "method,metric,mean,sd\n";
    for (const auto& [method, report] : reports) {
      write_report(dir, method, report);
      if (method != "baseline") {
        std::ofstream cmp(dir / ("comparison_" + method + ".csv"), std::ios::binary | std::ios::trunc);
        metrics::write_comparison_csv(reports.front().second, report, cmp);
      }
      const std::pair<const char*, const metrics::ColumnStat*> columns[] = {
          {"fid", &report.fid},
          {"diversity", &report.diversity},
          {"label_score", &report.label_score},
          {"acceptance_rate", &report.acceptance_rate}};
      for (const auto& [metric, stat] : columns) {
        records.push_back({{"method", method}, {"metric", metric}, {"mean", stat->mean},
                           {"sd", stat->sd}});
        table << method << ',' << metric << ',' << format_double(stat->mean) << ','
              << format_double(stat->sd) << '\n';
      }
    }
    const double zeta = cfg.resolved_zeta();
    nlohmann::json summary{{"preset", preset},
                           {"seed", cfg.seed},
                           {"zeta", std::isfinite(zeta) ? nlohmann::json(zeta) : nlohmann::json()},
                           {"labels", labels.size()},
                           {"records", records}};
    write_text_file(paths.root / "summary.json", summary.dump(2) + "\n");
    for (const auto& [method, report] : reports) {
      spdlog::info("{:>16}: fid {:.4f} diversity {:.4f} label score {:.4f} acceptance {:.4f}",
                   method, report.fid.mean, report.diversity.mean, report.label_score.mean,
                   report.acceptance_rate.mean);
    }
    return static_cast<int>(kExitOk);
  });
}

int run_cli(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Conditional density-ratio subsampling experiments"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string seed_text;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config, "Experiment JSON");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed_text, "Master seed (overrides the config)");
    sub->add_option("--threads", opts.threads, "OpenMP threads")->check(CLI::NonNegativeNumber);
    sub->add_flag("--timing", opts.timing, "Also write wall-clock timing files");
  };

  auto* train_sae = app.add_subcommand("train-sae", "Train the feature extractor");
  add_common(train_sae, true);
  auto* train_cdre = app.add_subcommand("train-cdre", "Train the conditional ratio model");
  add_common(train_cdre, true);

  std::string method = "cdr-rs";
  std::string model_path;
  std::string extractor_path;
  auto* sample = app.add_subcommand("sample", "Draw baseline or subsampled samples per label");
  add_common(sample, true);
  sample->add_option("--method", method, "baseline or cdr-rs");
  sample->add_option("--model", model_path, "Ratio model checkpoint");
  sample->add_option("--extractor", extractor_path, "Extractor checkpoint");

  std::string baseline_dir;
  std::string subsampled_dir;
  auto* evaluate = app.add_subcommand("evaluate", "Compare baseline and subsampled samples");
  add_common(evaluate, true);
  evaluate->add_option("--baseline", baseline_dir, "Baseline sample directory");
  evaluate->add_option("--subsampled", subsampled_dir, "Subsampled sample directory");

  std::string preset;
  auto* benchmark = app.add_subcommand("benchmark", "Run a bundled preset end to end");
  add_common(benchmark, false);
  benchmark->add_option("preset", preset, "class10, continuous60 or continuous60-nofilter")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (!seed_text.empty()) {
    try {
      std::size_t used = 0;
      opts.seed = std::stoull(seed_text, &used);
      if (used != seed_text.size()) throw std::invalid_argument(seed_text);
    } catch (const std::exception&) {
      spdlog::error("config error: --seed must be a nonnegative integer");
      return kExitConfig;
    }
  }

  if (*train_sae) return cmd_train_sae(opts);
  if (*train_cdre) return cmd_train_cdre(opts);
  if (*sample) return cmd_sample(opts, method, model_path, extractor_path);
  if (*evaluate) return cmd_evaluate(opts, baseline_dir, subsampled_dir);
  return cmd_benchmark(opts, preset);
}

}  // namespace cdrs::app
