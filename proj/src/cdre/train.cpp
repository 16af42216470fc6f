#include "cdrs/cdre/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cdrs/cdre/loss.hpp"
#include "cdrs/error.hpp"
#include "cdrs/nn/optim.hpp"
#include "cdrs/seed.hpp"

namespace cdrs::cdre {

ObjectiveGradient objective_gradient(const RatioModel& model, const Matrix& fake_features,
                                     std::span<const double> fake_labels,
                                     const Matrix& real_features,
                                     std::span<const double> real_labels, double lambda,
                                     nn::Mode mode, Rng* rng) {
  const Eigen::Index n_fake = fake_features.cols();
  const Eigen::Index n_real = real_features.cols();
  // One pass over [fake | real] so both halves share the batched kernels.
  Matrix input(model.net().input_dim(), n_fake + n_real);
  input.leftCols(n_fake) = model.assemble_input(fake_features, fake_labels);
  input.rightCols(n_real) = model.assemble_input(real_features, real_labels);

  auto fwd = nn::forward(model.net(), input, mode, rng);
  const Vector scores = fwd.output.row(0).transpose();
  const std::span<const double> fake_scores(scores.data(), static_cast<std::size_t>(n_fake));
  const std::span<const double> real_scores(scores.data() + n_fake,
                                            static_cast<std::size_t>(n_real));
  const ObjectiveTerms terms = penalized_objective(fake_scores, real_scores, lambda);

  Matrix out_grad(1, n_fake + n_real);
  out_grad.leftCols(n_fake) = terms.fake_grad.transpose();
  out_grad.rightCols(n_real) = terms.real_grad.transpose();
  return {terms.value, terms.csp, terms.penalty, nn::backward(model.net(), fwd.tape, out_grad)};
}

LossHistory train_cdre(const FeatureSet& real, FakeFeatureSource& fake, RatioModel& model,
                       const CdreTrainConfig& cfg) {
  require(real.size() > 0, "train_cdre: empty real set");
  require(static_cast<std::size_t>(real.features.cols()) == real.size(),
          "train_cdre: real features and labels disagree in count");
  require(real.features.rows() == model.feature_dim(),
          "train_cdre: real feature dimension " + std::to_string(real.features.rows()) +
              " does not match model feature_dim " + std::to_string(model.feature_dim()));
  require(fake.dim() == model.feature_dim(),
          "train_cdre: fake feature dimension " + std::to_string(fake.dim()) +
              " does not match model feature_dim " + std::to_string(model.feature_dim()));
  require(cfg.batch_size >= 1 && cfg.epochs >= 0, "train_cdre: bad batch size or epoch count");
  require(cfg.lambda >= 0.0 && cfg.lr >= 0.0, "train_cdre: lambda and lr must be nonnegative");

  Rng shuffle_rng(derive_seed(cfg.seed, "cdre.shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "cdre.dropout"));
  Rng fake_rng(derive_seed(cfg.seed, "cdre.fake"));

  const std::size_t n_real = real.size();
  const std::size_t m = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t iters_per_epoch = (n_real + m - 1) / m;

  auto adam = nn::AdamState::for_network(model.net(), cfg.lr);
  LossHistory history;
  std::vector<std::size_t> order(n_real);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n_real;  // forces a shuffle before the first batch
  std::size_t iteration = 0;

  Matrix real_batch(model.feature_dim(), static_cast<Eigen::Index>(m));
  std::vector<double> labels(m);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.lr = nn::step_decay_lr(cfg.lr, cfg.lr_decay_epochs, cfg.lr_decay_factor, epoch);
    for (std::size_t it = 0; it < iters_per_epoch; ++it, ++iteration) {
      for (std::size_t j = 0; j < m; ++j) {
        if (cursor == n_real) {
          std::shuffle(order.begin(), order.end(), shuffle_rng);
          cursor = 0;
        }
        const std::size_t idx = order[cursor++];
        real_batch.col(static_cast<Eigen::Index>(j)) =
            real.features.col(static_cast<Eigen::Index>(idx));
        labels[j] = real.labels[idx];
      }
      const Matrix fake_batch = fake.draw(labels, fake_rng);
      require(fake_batch.rows() == model.feature_dim() &&
                  static_cast<std::size_t>(fake_batch.cols()) == m,
              "train_cdre: fake source returned a batch of the wrong shape");

      ObjectiveGradient og;
      try {
        og = objective_gradient(model, fake_batch, labels, real_batch, labels, cfg.lambda,
                                nn::Mode::kTrain, &dropout_rng);
      } catch (const NumericalFailure& e) {
        throw NumericalFailure("train_cdre: iteration " + std::to_string(iteration) + ": " +
                               e.what());
      }
      if (!std::isfinite(og.value)) {
        throw NumericalFailure("train_cdre: non-finite loss at iteration " +
                               std::to_string(iteration));
      }
      history.epoch.push_back(epoch);
      history.objective.push_back(og.value);
      history.csp.push_back(og.csp);
      history.penalty.push_back(og.penalty);
      nn::adam_step(model.mutable_net(), og.grads, adam);
    }
    if (!history.objective.empty()) {
      spdlog::debug("train_cdre: epoch {} lr {:.3g} objective {:.6f}", epoch, adam.lr,
                    history.objective.back());
    }
  }
  return history;
}

}  // namespace cdrs::cdre
