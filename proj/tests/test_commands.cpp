#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cdrs/app/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("CDRS_LOG=error ") + CDRS_CLI_PATH + " " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / name) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path write_config(const std::string& name, const json& j) const {
    const fs::path p = root / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }
};

json small_continuous(const fs::path& out) {
  return json{{"task", "default_continuous"},
              {"seed", 7},
              {"output_dir", out.string()},
              {"labels_of_interest", {0.0, 0.5, 1.0}},
              {"extractor",
               {{"kind", "sae"},
                {"train_samples_per_label", 50},
                {"sae", {{"epochs", 100}, {"batch_size", 64}, {"lr", 0.01}}}}},
              {"ratio_model", {{"hidden", {16, 16}}, {"norm_groups", 8}, {"dropout_rate", 0.0}}},
              {"cdre", {{"epochs", 10}, {"batch_size", 64}, {"lr", 1e-3}}},
              {"real_samples_per_label", 20},
              {"sampler", {{"burn_in", 500}, {"filter", {{"enabled", true}}}}},
              {"n_target", 50},
              {"eval_real_samples_per_label", 200}};
}

json small_class(const fs::path& out) {
  return json{{"task", "default_class"},
              {"seed", 3},
              {"output_dir", out.string()},
              {"ratio_model", {{"hidden", {16, 16}}, {"norm_groups", 8}, {"dropout_rate", 0.0}}},
              {"cdre", {{"epochs", 3}, {"batch_size", 64}, {"lr", 1e-3}}},
              {"real_samples_per_label", 100},
              {"sampler", {{"burn_in", 500}}},
              {"n_target", 40},
              {"eval_real_samples_per_label", 200}};
}

}  // namespace

TEST_CASE("cli: configuration errors exit with code 2") {
  Workspace ws("cdrs_cli_config");
  const auto cfg = ws.write_config("no_task.json", json{{"seed", 1}});
  CHECK(run_cli("train-cdre --config " + cfg.string()) == 2);
  CHECK(run_cli("train-cdre --config " + (ws.root / "absent.json").string()) == 2);
  CHECK(run_cli("train-cdre") == 2);
  CHECK(run_cli("benchmark foo") == 2);
  CHECK(run_cli("frobnicate") == 2);
  const auto good = ws.write_config("good.json", small_class(ws.root / "out"));
  CHECK(run_cli("sample --method importance --config " + good.string()) == 2);
}

TEST_CASE("cli: missing or mismatched artifacts exit with code 3") {
  Workspace ws("cdrs_cli_artifacts");
  const auto cfg = ws.write_config("c.json", small_continuous(ws.root / "out"));
  CHECK(run_cli("train-cdre --config " + cfg.string()) == 3);
  CHECK(run_cli("sample --method cdr-rs --config " + cfg.string()) == 3);
  CHECK(run_cli("evaluate --config " + cfg.string()) == 3);

  REQUIRE(run_cli("train-sae --config " + cfg.string()) == 0);
  REQUIRE(run_cli("train-cdre --config " + cfg.string()) == 0);
  auto unfiltered = small_continuous(ws.root / "out");
  unfiltered["sampler"]["filter"]["enabled"] = false;
  const auto cfg_off = ws.write_config("off.json", unfiltered);
  CHECK(run_cli("sample --method cdr-rs --config " + cfg_off.string()) == 3);

  std::ofstream(ws.root / "out" / "ratio_model.ckpt", std::ios::trunc) << "not a checkpoint";
  CHECK(run_cli("sample --method cdr-rs --config " + cfg.string()) == 3);
}

TEST_CASE("cli: staged continuous run is reproducible") {
  Workspace ws("cdrs_cli_staged");
  const fs::path out = ws.root / "out";
  const auto cfg = ws.write_config("c.json", small_continuous(out));
  REQUIRE(run_cli("train-sae --config " + cfg.string()) == 0);
  CHECK(fs::exists(out / "extractor.ckpt"));
  CHECK(fs::exists(out / "extractor_loss.csv"));
  REQUIRE(run_cli("train-cdre --config " + cfg.string()) == 0);
  const std::string loss = slurp(out / "cdre_loss.csv");
  CHECK(loss.rfind("iteration,epoch,objective,csp,penalty\n", 0) == 0);
  const std::string model = slurp(out / "ratio_model.ckpt");

  REQUIRE(run_cli("train-cdre --config " + cfg.string()) == 0);
  CHECK(slurp(out / "cdre_loss.csv") == loss);
  CHECK(slurp(out / "ratio_model.ckpt") == model);
  REQUIRE(run_cli("train-cdre --threads 1 --config " + cfg.string()) == 0);
  CHECK(slurp(out / "cdre_loss.csv") == loss);

  REQUIRE(run_cli("sample --method baseline --config " + cfg.string()) == 0);
  REQUIRE(run_cli("sample --method cdr-rs --config " + cfg.string()) == 0);
  for (const char* method : {"baseline", "cdr-rs"}) {
    const fs::path dir = out / "samples" / method;
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv") ++files;
    }
    CHECK(files == 3);
    CHECK_FALSE(fs::exists(dir / "timing.json"));
    const auto summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("labels").size() == 3);
  }
  const auto first = cdrs::app::read_samples_csv(out / "samples" / "cdr-rs" / "label_000.csv");
  CHECK(first.has_predicted);
  CHECK(first.size() == 50);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(std::abs(first.predicted[i] - first.labels[i]) <= 3.0 / 59 + 1e-12);
  }

  REQUIRE(run_cli("evaluate --config " + cfg.string()) == 0);
  CHECK(fs::exists(out / "evaluation" / "comparison.csv"));
  CHECK(fs::exists(out / "evaluation" / "comparison.json"));
  CHECK(fs::exists(out / "evaluation" / "baseline_report.csv"));

  REQUIRE(run_cli("evaluate --baseline " + (out / "samples" / "cdr-rs").string() +
                  " --config " + cfg.string()) == 0);
  const std::string cmp = slurp(out / "evaluation" / "comparison.csv");
  CHECK(cmp.find("delta,0,0,0,0") != std::string::npos);

  REQUIRE(run_cli("sample --method cdr-rs --timing --config " + cfg.string()) == 0);
  CHECK(fs::exists(out / "samples" / "cdr-rs" / "timing.json"));
}

TEST_CASE("cli: disabling the filter matches an infinite half-width bit for bit") {
  Workspace ws("cdrs_cli_zeta");
  auto off = small_continuous(ws.root / "a");
  off["sampler"]["filter"] = {{"enabled", false}};
  auto inf = small_continuous(ws.root / "b");
  inf["sampler"]["filter"] = {{"enabled", true}, {"zeta", "inf"}};
  for (const auto& [name, j] : {std::pair{"off.json", off}, std::pair{"inf.json", inf}}) {
    const auto cfg = ws.write_config(name, j);
    REQUIRE(run_cli("train-sae --config " + cfg.string()) == 0);
    REQUIRE(run_cli("train-cdre --config " + cfg.string()) == 0);
    REQUIRE(run_cli("sample --method cdr-rs --config " + cfg.string()) == 0);
  }
  CHECK(slurp(ws.root / "a" / "ratio_model.ckpt") == slurp(ws.root / "b" / "ratio_model.ckpt"));
  for (const char* f : {"label_000.csv", "label_001.csv", "label_002.csv", "summary.json"}) {
    CHECK(slurp(ws.root / "a" / "samples" / "cdr-rs" / f) ==
          slurp(ws.root / "b" / "samples" / "cdr-rs" / f));
  }
}

TEST_CASE("cli: malformed sample tables exit with code 4") {
  Workspace ws("cdrs_cli_schema");
  const fs::path out = ws.root / "out";
  const auto cfg = ws.write_config("c.json", small_class(out));
  REQUIRE(run_cli("train-cdre --config " + cfg.string()) == 0);
  REQUIRE(run_cli("sample --method baseline --config " + cfg.string()) == 0);
  REQUIRE(run_cli("sample --method cdr-rs --config " + cfg.string()) == 0);
  CHECK(fs::exists(out / "samples" / "cdr-rs" / "label_009.csv"));
  REQUIRE(run_cli("evaluate --config " + cfg.string()) == 0);

  const fs::path victim = out / "samples" / "cdr-rs" / "label_004.csv";
  std::string text = slurp(victim);
  text.replace(text.find("actual_label"), 12, "actual_lable");
  std::ofstream(victim, std::ios::binary | std::ios::trunc) << text;
  const std::string cmd = std::string("CDRS_LOG=error ") + CDRS_CLI_PATH + " evaluate --config " +
                          cfg.string() + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
  const int status = pclose(pipe);
  CHECK(WEXITSTATUS(status) == 4);
  CHECK(output.find("actual_label") != std::string::npos);
}

TEST_CASE("cli: benchmark summary has one record per method and metric") {
  Workspace ws("cdrs_cli_benchmark");
  const fs::path out = ws.root / "class10";
  REQUIRE(run_cli("benchmark class10 --out " + out.string()) == 0);
  const auto summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("preset") == "class10");
  CHECK(summary.at("labels") == 10);
  CHECK(summary.at("zeta").is_null());
  const auto& records = summary.at("records");
  CHECK(records.size() == 8);
  for (const char* method : {"baseline", "cdr-rs"}) {
    for (const char* metric : {"fid", "diversity", "label_score", "acceptance_rate"}) {
      int hits = 0;
      for (const auto& r : records) {
        if (r.at("method") == method && r.at("metric") == metric) ++hits;
      }
      CHECK(hits == 1);
    }
  }
  const std::string csv = slurp(out / "summary.csv");
  CHECK(csv.rfind("method,metric,mean,sd\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  const auto config = json::parse(slurp(out / "config.json"));
  CHECK(config.at("output_dir") == out.string());
  CHECK(fs::exists(out / "ratio_model_cdr-rs.ckpt"));
  CHECK(fs::exists(out / "evaluation" / "comparison_cdr-rs.csv"));
}
