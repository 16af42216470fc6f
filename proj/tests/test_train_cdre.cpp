#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cdrs/cdre/loss.hpp"
#include "cdrs/cdre/train.hpp"
#include "cdrs/error.hpp"
#include "cdrs/synthetic/task.hpp"
#include "support/finite_diff.hpp"

using namespace cdrs;
using namespace cdrs::cdre;

namespace {

// Fake features straight from the synthetic generator.
class TaskFakeSource : public FakeFeatureSource {
 public:
  explicit TaskFakeSource(const synthetic::ConditionalGaussianTask& task) : task_(task) {}
  int dim() const override { return task_.dim(); }
  Matrix draw(std::span<const double> labels, Rng& rng) override {
    Matrix out(task_.dim(), static_cast<Eigen::Index>(labels.size()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
      out.col(static_cast<Eigen::Index>(j)) = task_.sample_fake(labels[j], 1, rng).x.col(0);
    }
    return out;
  }

 private:
  const synthetic::ConditionalGaussianTask& task_;
};

synthetic::ConditionalGaussianTask three_class_task() {
  auto spec = synthetic::ConditionalGaussianTask::default_class_spec();
  spec.num_classes = 3;
  return synthetic::ConditionalGaussianTask(spec);
}

FeatureSet real_set(const synthetic::ConditionalGaussianTask& task, int per_label,
                    std::uint64_t seed) {
  Rng rng(seed);
  FeatureSet set;
  set.features.resize(task.dim(), per_label * task.spec().num_classes);
  Eigen::Index col = 0;
  for (double y : task.training_labels()) {
    const auto batch = task.sample_real(y, static_cast<std::size_t>(per_label), rng);
    set.features.middleCols(col, per_label) = batch.x;
    col += per_label;
    set.labels.insert(set.labels.end(), static_cast<std::size_t>(per_label), y);
  }
  return set;
}

RatioModel small_model(int classes, std::uint64_t seed, std::vector<int> hidden = {32, 16},
                       int groups = 4) {
  Rng rng(seed);
  RatioModelSpec spec;
  spec.feature_dim = 2;
  spec.embedding = ConditionEmbedding::one_hot(classes);
  spec.hidden = std::move(hidden);
  spec.norm_groups = groups;
  spec.dropout_rate = 0.0;
  return RatioModel::create(spec, rng);
}

CdreTrainConfig quick_config(double lambda, int epochs) {
  CdreTrainConfig cfg;
  cfg.lambda = lambda;
  cfg.lr = 1e-3;
  cfg.lr_decay_epochs = {epochs / 2};
  cfg.batch_size = 128;
  cfg.epochs = epochs;
  cfg.seed = 42;
  return cfg;
}

double mean_fake_score(const RatioModel& model, const synthetic::ConditionalGaussianTask& task,
                       std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  std::size_t n = 0;
  for (double y : task.training_labels()) {
    const Vector s = model.score_batch(task.sample_fake(y, 4000, rng).x, y);
    sum += s.sum();
    n += static_cast<std::size_t>(s.size());
  }
  return sum / static_cast<double>(n);
}

double average(const std::vector<double>& v, std::size_t from, std::size_t to) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(from),
                         v.begin() + static_cast<std::ptrdiff_t>(to), 0.0) /
         static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("zero learning rate leaves the model unchanged") {
  const auto task = three_class_task();
  TaskFakeSource fake(task);
  auto model = small_model(3, 1);
  const auto before = model.net().layers();
  CdreTrainConfig cfg = quick_config(0.0, 1);
  cfg.lr = 0.0;
  const auto history = train_cdre(real_set(task, 50, 2), fake, model, cfg);
  CHECK(history.size() == 2);  // ceil(150 / 128) iterations
  for (std::size_t k = 0; k < before.size(); ++k) {
    CHECK(model.net().layers()[k].weights == before[k].weights);
    CHECK(model.net().layers()[k].bias == before[k].bias);
  }
}

TEST_CASE("objective gradient matches central differences on 100 random instances") {
  Rng rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RatioModelSpec spec;
    spec.feature_dim = 2;
    spec.embedding = ConditionEmbedding::one_hot(3);
    spec.hidden = {8, 4};
    spec.norm_groups = trial % 2 == 0 ? 2 : 0;
    spec.dropout_rate = trial % 3 == 0 ? 0.5 : 0.0;
    spec.output_bias = 1.0;
    auto model = RatioModel::create(spec, rng);
    for (auto& layer : model.mutable_net().mutable_layers())
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) += 0.3 * g(rng);
    const int n = 3 + trial % 4;
    Matrix fake(2, n), real(2, n);
    for (Eigen::Index i = 0; i < fake.size(); ++i) fake.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < real.size(); ++i) real.data()[i] = g(rng);
    std::vector<double> labels(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) labels[static_cast<std::size_t>(j)] = static_cast<double>(j % 3);
    const double lambda = u(rng);
    const auto mode = spec.dropout_rate > 0 ? nn::Mode::kTrain : nn::Mode::kEval;
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);

    Rng replay(seed);
    const auto analytic = objective_gradient(model, fake, labels, real, labels, lambda, mode, &replay);

    // Independent recomputation: forward each half, then the loss formulas.
    const Matrix in_fake = model.assemble_input(fake, labels);
    const Matrix in_real = model.assemble_input(real, labels);
    Matrix joined(in_fake.rows(), 2 * n);
    joined << in_fake, in_real;
    auto& net = model.mutable_net();
    const auto numeric = testing::numeric_gradients(net, [&](const nn::MlpNetwork& m) {
      Rng r(seed);
      const Vector s = nn::forward(m, joined, mode, &r).output.row(0).transpose();
      std::vector<double> fs(s.data(), s.data() + n), rs(s.data() + n, s.data() + 2 * n);
      return csp_loss(fs, rs) + lambda * penalty(fs);
    });
    worst = std::max(worst, testing::max_relative_error(analytic.grads, numeric));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("training rejects mismatched dimensions and reports non-finite loss") {
  const auto task = three_class_task();
  TaskFakeSource fake(task);
  auto model = small_model(3, 3);

  FeatureSet wrong;
  wrong.features = Matrix::Zero(3, 4);
  wrong.labels = {0, 1, 2, 0};
  CHECK_THROWS_AS(train_cdre(wrong, fake, model, quick_config(0.0, 1)), ContractViolation);

  FeatureSet poisoned = real_set(task, 20, 4);
  poisoned.features.setConstant(std::numeric_limits<double>::quiet_NaN());
  try {
    train_cdre(poisoned, fake, model, quick_config(0.0, 1));
    FAIL("expected a numerical failure");
  } catch (const NumericalFailure& e) {
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("training is seed-deterministic and the objective decreases") {
  const auto task = three_class_task();
  const auto real = real_set(task, 600, 5);
  TaskFakeSource fake_a(task), fake_b(task);
  auto a = small_model(3, 6);
  auto b = small_model(3, 6);
  const auto cfg = quick_config(1e-2, 40);
  const auto ha = train_cdre(real, fake_a, a, cfg);
  const auto hb = train_cdre(real, fake_b, b, cfg);
  CHECK(ha.objective == hb.objective);
  CHECK(a.net().layers().back().weights == b.net().layers().back().weights);
  REQUIRE(ha.size() == 40 * 15);
  CHECK(ha.epoch.front() == 0);
  CHECK(ha.epoch.back() == 39);
  CHECK(average(ha.objective, ha.size() - 100, ha.size()) < average(ha.objective, 0, 100));
}

TEST_CASE("held-out cSP loss approaches the oracle-ratio loss") {
  const auto task = three_class_task();
  const auto real = real_set(task, 2000, 7);
  TaskFakeSource fake(task);
  auto model = small_model(3, 8, {64, 32}, 8);
  const auto cfg = quick_config(1e-2, 40);
  train_cdre(real, fake, model, cfg);

  Rng rng(9);
  std::vector<double> fake_model, fake_oracle, real_model, real_oracle;
  for (double y : task.training_labels()) {
    const Matrix xf = task.sample_fake(y, 5000, rng).x;
    const Matrix xr = task.sample_real(y, 5000, rng).x;
    const Vector sf = model.score_batch(xf, y);
    const Vector sr = model.score_batch(xr, y);
    for (Eigen::Index j = 0; j < xf.cols(); ++j) {
      fake_model.push_back(sf(j));
      fake_oracle.push_back(task.true_ratio(xf.col(j), y));
      real_model.push_back(sr(j));
      real_oracle.push_back(task.true_ratio(xr.col(j), y));
    }
  }
  const double trained = csp_loss(fake_model, real_model);
  const double oracle = csp_loss(fake_oracle, real_oracle);
  CHECK(std::abs(trained - oracle) < 0.05);
}

TEST_CASE("stronger penalties pull the fake mean toward one") {
  const auto task = three_class_task();
  const auto real = real_set(task, 300, 10);
  std::vector<double> gaps;
  for (double lambda : {0.0, 1e-3, 1e-2, 1e-1}) {
    TaskFakeSource fake(task);
    auto model = small_model(3, 11);
    train_cdre(real, fake, model, quick_config(lambda, 30));
    gaps.push_back(std::abs(mean_fake_score(model, task, 12) - 1.0));
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    CHECK(gaps[i] <= gaps[i - 1] * 1.1);
  }
}
