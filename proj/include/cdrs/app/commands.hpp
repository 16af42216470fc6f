#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace cdrs::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitArtifact = 3,
  kExitSchema = 4,
  kExitBudget = 5,
};

struct CommonOptions {
  std::string config;  // path to the experiment JSON
  std::string out;     // overrides output_dir
  std::optional<std::uint64_t> seed;
  int threads = 0;     // 0: OpenMP default
  bool timing = false; // also write wall-clock timing files
};

int cmd_train_sae(const CommonOptions& opts);
int cmd_train_cdre(const CommonOptions& opts);
/// method is "baseline" or "cdr-rs"; empty paths fall back to the output directory's artifacts.
int cmd_sample(const CommonOptions& opts, const std::string& method, const std::string& model_path,
               const std::string& extractor_path);
int cmd_evaluate(const CommonOptions& opts, const std::string& baseline_dir,
                 const std::string& subsampled_dir);
int cmd_benchmark(const CommonOptions& opts, const std::string& preset);

/// Parses argv and dispatches to a subcommand; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace cdrs::app
