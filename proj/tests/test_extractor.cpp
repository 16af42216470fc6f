#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "cdrs/error.hpp"
#include "cdrs/feature/classifier.hpp"
#include "cdrs/feature/extractor.hpp"
#include "support/finite_diff.hpp"

using namespace cdrs;
using namespace cdrs::feature;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

// Three well-separated clusters in 2-D.
void cluster_data(int per_class, std::uint64_t seed, Matrix& x, std::vector<int>& classes) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  const double centres[3][2] = {{-2, 0}, {2, 0}, {0, 2}};
  x.resize(2, 3 * per_class);
  classes.clear();
  for (int c = 0; c < 3; ++c) {
    for (int j = 0; j < per_class; ++j) {
      const int col = c * per_class + j;
      x(0, col) = centres[c][0] + g(rng);
      x(1, col) = centres[c][1] + g(rng);
      classes.push_back(c);
    }
  }
}

}  // namespace

TEST_CASE("identity extractor returns its input") {
  const IdentityExtractor id(2);
  Vector x(2);
  x << 0.2, -0.7;
  const Vector h = id.extract(x);
  CHECK(h(0) == 0.2);
  CHECK(h(1) == -0.7);
  CHECK(id.kind() == "identity");
  CHECK_THROWS_AS(id.extract(Matrix::Zero(3, 1)), ContractViolation);
  CHECK_THROWS_AS(IdentityExtractor(0), ContractViolation);
}

TEST_CASE("identity extractor checkpoints record kind and dimension") {
  const auto path = temp_file("cdrs_identity.ckpt");
  save_extractor(IdentityExtractor(5), path);
  const auto back = load_extractor(path);
  std::filesystem::remove(path);
  CHECK(back->kind() == "identity");
  CHECK(back->input_dim() == 5);
}

TEST_CASE("checkpoints without an extractor are rejected") {
  nn::Checkpoint empty;
  CHECK_THROWS_AS(restore_extractor(empty), FormatError);
  nn::Checkpoint odd;
  odd.set_text("extractor", R"({"kind":"resnet","input_dim":2})");
  CHECK_THROWS_AS(restore_extractor(odd), FormatError);
  nn::Checkpoint broken;
  broken.set_text("extractor", "{");
  CHECK_THROWS_AS(restore_extractor(broken), FormatError);
}

TEST_CASE("classifier extractor keeps the dimension and rectifies its features") {
  Rng rng(1);
  const auto clf = ClassifierExtractor::create(2, 3, rng);
  CHECK(clf.input_dim() == 2);
  CHECK(clf.num_classes() == 3);
  Matrix x;
  std::vector<int> classes;
  cluster_data(10, 2, x, classes);
  const Matrix h = clf.extract(x);
  CHECK(h.rows() == 2);
  CHECK(h.minCoeff() >= 0.0);
  CHECK(clf.logits(x).rows() == 3);
}

TEST_CASE("cross-entropy gradients match central differences") {
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto clf = ClassifierExtractor::create(2, 3, rng);
    for (auto* net : {&clf.mutable_encoder(), &clf.mutable_head()})
      for (auto& layer : net->mutable_layers())
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) += 0.3 * g(rng);
    Matrix x(2, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const std::vector<int> classes{0, 1, 2, 1, 0};
    const auto analytic = cross_entropy_gradients(clf, x, classes);
    auto loss = [&](const ClassifierExtractor& m) {
      const Matrix z = m.logits(x);
      double total = 0.0;
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double top = z.col(j).maxCoeff();
        const double lse = top + std::log((z.col(j).array() - top).exp().sum());
        total += lse - z(classes[static_cast<std::size_t>(j)], j);
      }
      return total / static_cast<double>(z.cols());
    };
    CHECK(analytic.loss == doctest::Approx(loss(clf)).epsilon(1e-12));
    worst = std::max(worst, testing::max_relative_error(
        analytic.encoder, testing::numeric_gradients(clf.mutable_encoder(), [&](const nn::MlpNetwork&) { return loss(clf); })));
    worst = std::max(worst, testing::max_relative_error(
        analytic.head, testing::numeric_gradients(clf.mutable_head(), [&](const nn::MlpNetwork&) { return loss(clf); })));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("classifier training separates clusters and reloads identically") {
  Matrix x;
  std::vector<int> classes;
  cluster_data(200, 4, x, classes);
  ClassifierTrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr_decay_epochs = {20};
  cfg.batch_size = 64;
  cfg.seed = 9;
  const auto result = train_classifier(x, classes, 3, cfg);
  CHECK(result.loss_history.back() < result.loss_history.front());
  Matrix held;
  std::vector<int> truth;
  cluster_data(100, 5, held, truth);
  const auto predicted = result.model.predict_classes(held);
  int correct = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) correct += predicted[j] == truth[j];
  CHECK(correct >= 0.98 * static_cast<double>(truth.size()));

  const auto path = temp_file("cdrs_classifier.ckpt");
  save_extractor(result.model, path);
  const auto back = load_extractor(path);
  std::filesystem::remove(path);
  CHECK(back->kind() == "classifier");
  CHECK(back->extract(held) == result.model.extract(held));
}
