#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "cdrs/app/config.hpp"

using namespace cdrs;
using namespace cdrs::app;
using nlohmann::json;

namespace {

std::string error_key(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("a minimal config needs only a task") {
  const auto c = parse_config(json{{"task", "default_class"}});
  CHECK(c.task.kind == synthetic::LabelKind::kClass);
  CHECK(c.extractor.kind == "identity");
  CHECK(c.cdre.lambda == 1e-2);
  CHECK(c.cdre.lr == 1e-4);
  CHECK(c.cdre.batch_size == 256);
  CHECK(c.cdre.epochs == 200);
  CHECK(c.sampler.settings.burn_in == 10000);
  CHECK(c.sampler.settings.budget_factor == 1000);
  CHECK(c.resolved_labels().size() == 10);
  CHECK(std::isinf(c.resolved_zeta()));
}

TEST_CASE("missing or unknown keys name the offending key") {
  CHECK(error_key(json::object()) == "task");
  CHECK(error_key(json{{"task", "default_class"}, {"seeed", 1}}) == "seeed");
  CHECK(error_key(json{{"task", "default_class"}, {"cdre", {{"lambda", 0.5}}}}) == "cdre.lambda");
  CHECK(error_key(json{{"task", "default_class"}, {"cdre", {{"lr", "fast"}}}}) == "cdre.lr");
  CHECK(error_key(json{{"task", "mnist"}}) == "task");
  CHECK(error_key(json{{"task", "default_class"}, {"labels_of_interest", {12}}}) ==
        "labels_of_interest");
  CHECK(error_key(json{{"task", "default_class"},
                       {"ratio_model", {{"hidden", {12}}, {"norm_groups", 8}}}}) ==
        "ratio_model.hidden");
  CHECK(error_key(json{{"task", "default_class"},
                       {"sampler", {{"filter", {{"enabled", true}}}}}}) ==
        "sampler.filter.enabled");
  try {
    parse_config(json{{"task", "default_class"}, {"extractor", {{"kind", "resnet"}}}});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("extractor.kind") != std::string::npos);
  }
}

TEST_CASE("filter half-width: rule of thumb, explicit value and the infinite sentinel") {
  json j{{"task", "default_continuous"},
         {"extractor", {{"kind", "sae"}}},
         {"sampler", {{"filter", {{"enabled", true}, {"m_kappa", 2}}}}}};
  CHECK(parse_config(j).resolved_zeta() == doctest::Approx(6.0 / 59));
  j["sampler"]["filter"]["zeta"] = 0.1;
  CHECK(parse_config(j).resolved_zeta() == 0.1);
  j["sampler"]["filter"]["zeta"] = "inf";
  const auto off = parse_config(j);
  CHECK_FALSE(off.sampler.filter.enabled);
  CHECK(std::isinf(off.resolved_zeta()));
}

TEST_CASE("explicit task objects are validated") {
  auto task = synthetic::ConditionalGaussianTask::default_class_spec().to_json();
  CHECK(parse_config(json{{"task", task}}).task.num_classes == 10);
  task["real_cov"] = json::array({json::array({1.0, 3.0}), json::array({3.0, 1.0})});
  CHECK(error_key(json{{"task", task}}) == "task");
  auto extra = synthetic::ConditionalGaussianTask::default_class_spec().to_json();
  extra["colour"] = "red";
  CHECK(error_key(json{{"task", extra}}) == "task.colour");
}

TEST_CASE("configs round-trip through their JSON form") {
  for (const auto& name : preset_names()) {
    const auto c = preset_config(name);
    const auto back = parse_config(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.resolved_zeta() == c.resolved_zeta());
  }
}

TEST_CASE("presets") {
  CHECK(preset_names() == std::vector<std::string>{"class10", "continuous60", "continuous60-nofilter"});
  CHECK(preset_config("class10").task.kind == synthetic::LabelKind::kClass);
  const auto filtered = preset_config("continuous60");
  CHECK(filtered.sampler.filter.enabled);
  CHECK(filtered.extractor.kind == "sae");
  CHECK(filtered.resolved_labels().size() == 60);
  CHECK(filtered.resolved_zeta() == doctest::Approx(3.0 / 59));
  CHECK_FALSE(preset_config("continuous60-nofilter").sampler.filter.enabled);
  try {
    preset_config("foo");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("class10") != std::string::npos);
  }
}

TEST_CASE("config files: unreadable paths and malformed JSON") {
  CHECK_THROWS_AS(load_config("/nonexistent/cdrs.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "cdrs_bad_config.json";
  std::ofstream(path) << "{\"task\": ";
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::ofstream(path) << R"({"task": "default_continuous", "n_target": 7})";
  CHECK(load_config(path).n_target == 7);
  std::filesystem::remove(path);
}

TEST_CASE("an explicit infinite half-width survives the JSON round trip") {
  const auto c = parse_config(json{{"task", "default_continuous"},
                                   {"sampler", {{"filter", {{"zeta", "inf"}}}}}});
  const auto j = c.to_json();
  CHECK(j["sampler"]["filter"]["zeta"] == "inf");
  CHECK(std::isinf(parse_config(j).resolved_zeta()));
}
