#include "cdrs/app/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "cdrs/error.hpp"

namespace cdrs::app {

namespace {

using nlohmann::json;

// Typed access to one JSON object with dotted-path error messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }
  bool has(const std::string& name) const {
    seen_.insert(name);
    return j_.contains(name) && !j_.at(name).is_null();
  }
  const json& raw(const std::string& name) const {
    if (!has(name)) throw ConfigError(key(name), "missing required key");
    return j_.at(name);
  }
  Reader child(const std::string& name) const { return Reader(raw(name), key(name)); }

  template <typename T>
  T get(const std::string& name) const {
    const json& v = raw(name);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key(name), "has the wrong type");
    }
  }
  template <typename T>
  T get(const std::string& name, T fallback) const {
    return has(name) ? get<T>(name) : fallback;
  }
  double number(const std::string& name, double fallback, double lo, double hi) const {
    const double v = get<double>(name, fallback);
    if (!(v >= lo && v <= hi)) {
      throw ConfigError(key(name), "value " + std::to_string(v) + " outside [" +
                                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }
  int integer(const std::string& name, int fallback, int lo) const {
    const int v = get<int>(name, fallback);
    if (v < lo) throw ConfigError(key(name), "must be at least " + std::to_string(lo));
    return v;
  }
  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (seen_.count(k) == 0) throw ConfigError(key(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

synthetic::TaskSpec parse_task(const Reader& root) {
  const json& t = root.raw("task");
  if (t.is_string()) {
    const auto name = t.get<std::string>();
    if (name == "default_class") return synthetic::ConditionalGaussianTask::default_class_spec();
    if (name == "default_continuous") {
      return synthetic::ConditionalGaussianTask::default_continuous_spec();
    }
    throw ConfigError("task", "unknown task preset '" + name +
                                  "' (expected default_class or default_continuous)");
  }
  Reader r(t, "task");
  for (const char* k : {"kind", "num_classes", "num_train_labels", "base", "slope", "fake_shift",
                        "real_cov", "fake_cov", "attribute_offsets", "real_weights",
                        "fake_weights", "label_noise_sd"}) {
    r.has(k);
  }
  r.reject_unknown();
  try {
    auto spec = synthetic::TaskSpec::from_json(t);
    synthetic::ConditionalGaussianTask check(spec);
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError("task", e.what());
  } catch (const ContractViolation& e) {
    throw ConfigError("task", e.what());
  }
}

std::vector<int> parse_milestones(const Reader& r, const std::string& name,
                                  std::vector<int> fallback) {
  auto v = r.get<std::vector<int>>(name, std::move(fallback));
  for (int e : v) {
    if (e < 0) throw ConfigError(r.key(name), "milestones must be nonnegative");
  }
  return v;
}

}  // namespace

std::vector<double> ExperimentConfig::resolved_labels() const {
  if (!labels_of_interest.empty()) return labels_of_interest;
  return synthetic::ConditionalGaussianTask(task).training_labels();
}

double ExperimentConfig::resolved_zeta() const {
  if (!sampler.filter.enabled) return sampler::kFilterDisabled;
  if (sampler.filter.zeta) return *sampler.filter.zeta;
  const synthetic::ConditionalGaussianTask t(task);
  std::vector<double> positions;
  for (double y : t.training_labels()) positions.push_back(t.position(y));
  return sampler::default_zeta(positions, sampler.filter.m_kappa);
}

ExperimentConfig parse_config(const json& j) {
  Reader root(j, "");
  ExperimentConfig c;
  c.task = parse_task(root);
  c.name = root.get<std::string>("name", c.name);
  c.seed = root.get<std::uint64_t>("seed", c.seed);
  c.output_dir = root.get<std::string>("output_dir", c.output_dir);
  c.real_samples_per_label = root.integer("real_samples_per_label", c.real_samples_per_label, 2);
  c.n_target = root.integer("n_target", c.n_target, 1);
  c.eval_real_samples_per_label =
      root.integer("eval_real_samples_per_label", c.eval_real_samples_per_label, 2);
  c.labels_of_interest = root.get<std::vector<double>>("labels_of_interest", {});
  {
    const synthetic::ConditionalGaussianTask t(c.task);
    for (double y : c.labels_of_interest) {
      if (!t.in_label_space(y)) {
        throw ConfigError("labels_of_interest", "label " + std::to_string(y) +
                                                    " is outside the task's label space");
      }
    }
  }

  if (root.has("extractor")) {
    const Reader r = root.child("extractor");
    auto& e = c.extractor;
    e.kind = r.get<std::string>("kind", e.kind);
    if (e.kind != "identity" && e.kind != "sae" && e.kind != "classifier") {
      throw ConfigError(r.key("kind"), "must be identity, sae or classifier");
    }
    if (e.kind == "classifier" && c.task.kind != synthetic::LabelKind::kClass) {
      throw ConfigError(r.key("kind"), "the classifier extractor needs a class task");
    }
    e.train_samples_per_label = r.integer("train_samples_per_label", e.train_samples_per_label, 1);
    if (r.has("sae")) {
      const Reader s = r.child("sae");
      e.sae.lambda_prime = s.number("lambda_prime", e.sae.lambda_prime, 0.0, 1e6);
      e.sae.lr = s.number("lr", e.sae.lr, 0.0, 10.0);
      e.sae.lr_decay_epochs = parse_milestones(s, "lr_decay_epochs", e.sae.lr_decay_epochs);
      e.sae.lr_decay_factor = s.number("lr_decay_factor", e.sae.lr_decay_factor, 0.0, 1.0);
      e.sae.momentum = s.number("momentum", e.sae.momentum, 0.0, 0.999999);
      e.sae.weight_decay = s.number("weight_decay", e.sae.weight_decay, 0.0, 1.0);
      e.sae.batch_size = s.integer("batch_size", e.sae.batch_size, 1);
      e.sae.epochs = s.integer("epochs", e.sae.epochs, 0);
      s.reject_unknown();
    }
    if (r.has("classifier")) {
      const Reader s = r.child("classifier");
      auto& k = e.classifier;
      k.lr = s.number("lr", k.lr, 0.0, 10.0);
      k.lr_decay_epochs = parse_milestones(s, "lr_decay_epochs", k.lr_decay_epochs);
      k.lr_decay_factor = s.number("lr_decay_factor", k.lr_decay_factor, 0.0, 1.0);
      k.momentum = s.number("momentum", k.momentum, 0.0, 0.999999);
      k.weight_decay = s.number("weight_decay", k.weight_decay, 0.0, 1.0);
      k.batch_size = s.integer("batch_size", k.batch_size, 1);
      k.epochs = s.integer("epochs", k.epochs, 0);
      s.reject_unknown();
    }
    r.reject_unknown();
  }

  if (root.has("ratio_model")) {
    const Reader r = root.child("ratio_model");
    auto& m = c.ratio_model;
    m.hidden = r.get<std::vector<int>>("hidden", m.hidden);
    m.norm_groups = r.integer("norm_groups", m.norm_groups, 0);
    m.dropout_rate = r.number("dropout_rate", m.dropout_rate, 0.0, 0.99);
    m.output_bias = r.number("output_bias", m.output_bias, -1e6, 1e6);
    m.embed_dim = r.integer("embed_dim", m.embed_dim, 2);
    if (m.embed_dim % 2 != 0) throw ConfigError(r.key("embed_dim"), "must be even");
    for (int w : m.hidden) {
      if (w < 1) throw ConfigError(r.key("hidden"), "widths must be positive");
      if (m.norm_groups > 0 && w % m.norm_groups != 0) {
        throw ConfigError(r.key("hidden"), "every width must be divisible by norm_groups");
      }
    }
    r.reject_unknown();
  }

  if (root.has("cdre")) {
    const Reader r = root.child("cdre");
    auto& t = c.cdre;
    t.lambda = r.number("lambda", t.lambda, 0.0, 0.1);
    t.lr = r.number("lr", t.lr, 0.0, 10.0);
    t.lr_decay_epochs = parse_milestones(r, "lr_decay_epochs", t.lr_decay_epochs);
    t.lr_decay_factor = r.number("lr_decay_factor", t.lr_decay_factor, 0.0, 1.0);
    t.batch_size = r.integer("batch_size", t.batch_size, 1);
    t.epochs = r.integer("epochs", t.epochs, 0);
    r.reject_unknown();
  }

  if (root.has("sampler")) {
    const Reader r = root.child("sampler");
    auto& s = c.sampler;
    s.settings.burn_in = static_cast<std::size_t>(r.integer("burn_in", static_cast<int>(s.settings.burn_in), 1));
    s.settings.budget_factor = r.number("budget_factor", s.settings.budget_factor, 1.0, 1e9);
    s.settings.frozen_m = r.get<bool>("frozen_m", s.settings.frozen_m);
    s.settings.chunk = static_cast<std::size_t>(r.integer("chunk", static_cast<int>(s.settings.chunk), 1));
    s.pool_factor = r.integer("pool_factor", s.pool_factor, 1);
    if (r.has("filter")) {
      const Reader f = r.child("filter");
      s.filter.enabled = f.get<bool>("enabled", s.filter.enabled);
      if (f.has("zeta")) {
        const json& z = f.raw("zeta");
        if (z.is_string() && z.get<std::string>() == "inf") {
          s.filter.zeta = sampler::kFilterDisabled;
        } else {
          s.filter.zeta = f.number("zeta", 0.0, 0.0, 1e300);
        }
      }
      s.filter.m_kappa = f.number("m_kappa", s.filter.m_kappa, 1e-12, 1e12);
      f.reject_unknown();
      if (s.filter.enabled && s.filter.zeta && std::isinf(*s.filter.zeta)) {
        s.filter.enabled = false;
        s.filter.zeta.reset();
      }
    }
    r.reject_unknown();
  }
  if (c.sampler.filter.enabled && c.task.kind != synthetic::LabelKind::kContinuous) {
    throw ConfigError("sampler.filter.enabled", "vicinity filtering needs a continuous task");
  }
  if (c.sampler.filter.enabled && c.extractor.kind != "sae") {
    throw ConfigError("sampler.filter.enabled", "vicinity filtering needs the sae extractor");
  }
  root.reject_unknown();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["task"] = task.to_json();
  j["extractor"] = {{"kind", extractor.kind},
                    {"train_samples_per_label", extractor.train_samples_per_label},
                    {"sae",
                     {{"lambda_prime", extractor.sae.lambda_prime},
                      {"lr", extractor.sae.lr},
                      {"lr_decay_epochs", extractor.sae.lr_decay_epochs},
                      {"lr_decay_factor", extractor.sae.lr_decay_factor},
                      {"momentum", extractor.sae.momentum},
                      {"weight_decay", extractor.sae.weight_decay},
                      {"batch_size", extractor.sae.batch_size},
                      {"epochs", extractor.sae.epochs}}},
                    {"classifier",
                     {{"lr", extractor.classifier.lr},
                      {"lr_decay_epochs", extractor.classifier.lr_decay_epochs},
                      {"lr_decay_factor", extractor.classifier.lr_decay_factor},
                      {"momentum", extractor.classifier.momentum},
                      {"weight_decay", extractor.classifier.weight_decay},
                      {"batch_size", extractor.classifier.batch_size},
                      {"epochs", extractor.classifier.epochs}}}};
  j["ratio_model"] = {{"hidden", ratio_model.hidden},
                      {"norm_groups", ratio_model.norm_groups},
                      {"dropout_rate", ratio_model.dropout_rate},
                      {"output_bias", ratio_model.output_bias},
                      {"embed_dim", ratio_model.embed_dim}};
  j["cdre"] = {{"lambda", cdre.lambda},
               {"lr", cdre.lr},
               {"lr_decay_epochs", cdre.lr_decay_epochs},
               {"lr_decay_factor", cdre.lr_decay_factor},
               {"batch_size", cdre.batch_size},
               {"epochs", cdre.epochs}};
  json filter{{"enabled", sampler.filter.enabled}, {"m_kappa", sampler.filter.m_kappa}};
  if (sampler.filter.zeta) {
    if (std::isinf(*sampler.filter.zeta)) {
      filter["zeta"] = "inf";
    } else {
      filter["zeta"] = *sampler.filter.zeta;
    }
  }
  j["sampler"] = {{"burn_in", sampler.settings.burn_in},
                  {"budget_factor", sampler.settings.budget_factor},
                  {"frozen_m", sampler.settings.frozen_m},
                  {"chunk", sampler.settings.chunk},
                  {"pool_factor", sampler.pool_factor},
                  {"filter", filter}};
  j["real_samples_per_label"] = real_samples_per_label;
  if (!labels_of_interest.empty()) j["labels_of_interest"] = labels_of_interest;
  j["n_target"] = n_target;
  j["eval_real_samples_per_label"] = eval_real_samples_per_label;
  return j;
}

std::vector<std::string> preset_names() { return {"class10", "continuous60", "continuous60-nofilter"}; }

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.seed = 20240601;
  if (name == "class10") {
    c.task = synthetic::ConditionalGaussianTask::default_class_spec();
    c.extractor.kind = "identity";
    c.ratio_model.hidden = {64, 64, 32, 32};
    c.ratio_model.dropout_rate = 0.0;
    c.real_samples_per_label = 4000;
    c.cdre.epochs = 30;
    c.cdre.lr_decay_epochs = {12, 22};
    c.cdre.lr = 1e-3;
    c.n_target = 2000;
    c.eval_real_samples_per_label = 20000;
    return c;
  }
  if (name == "continuous60" || name == "continuous60-nofilter") {
    c.task = synthetic::ConditionalGaussianTask::default_continuous_spec();
    c.extractor.kind = "sae";
    c.extractor.train_samples_per_label = 200;
    c.ratio_model.hidden = {64, 64, 32, 32};
    c.ratio_model.dropout_rate = 0.0;
    c.real_samples_per_label = 200;
    c.cdre.epochs = 60;
    c.cdre.lr_decay_epochs = {24, 45};
    c.cdre.lr = 1e-3;
    c.n_target = 1000;
    c.eval_real_samples_per_label = 5000;
    c.sampler.filter.enabled = name == "continuous60";
    c.sampler.filter.m_kappa = 1.0;
    return c;
  }
  std::string known;
  for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
  throw ConfigError("preset", "unknown preset '" + name + "' (available: " + known + ")");
}

}  // namespace cdrs::app
