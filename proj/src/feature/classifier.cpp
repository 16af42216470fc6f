#include "cdrs/feature/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdrs/error.hpp"
#include "cdrs/nn/optim.hpp"
#include "cdrs/seed.hpp"

namespace cdrs::feature {

namespace {
constexpr int kWidthMultiplier = 4;
constexpr double kCodeBias = 0.5;
constexpr const char* kMetaKey = "extractor";
}  // namespace

ClassifierExtractor::ClassifierExtractor(nn::MlpNetwork encoder, nn::MlpNetwork head)
    : encoder_(std::move(encoder)), head_(std::move(head)) {
  require(encoder_.output_dim() == encoder_.input_dim(),
          "ClassifierExtractor: feature width must equal input width");
  require(encoder_.final_activation() == nn::Activation::kNonneg,
          "ClassifierExtractor: encoder output must be rectified");
  require(head_.input_dim() == encoder_.output_dim() && head_.output_dim() >= 2 &&
              head_.final_activation() == nn::Activation::kIdentity,
          "ClassifierExtractor: head must map features to at least two logits");
}

ClassifierExtractor ClassifierExtractor::create(int input_dim, int num_classes, Rng& rng) {
  require(input_dim >= 1 && num_classes >= 2, "ClassifierExtractor: bad dimensions");
  nn::MlpNetwork encoder(
      {input_dim, {kWidthMultiplier * input_dim}, input_dim, 0, 0.0, nn::Activation::kNonneg},
      rng);
  encoder.mutable_layers().back().bias.setConstant(kCodeBias);
  nn::MlpNetwork head({input_dim, {}, num_classes, 0, 0.0, nn::Activation::kIdentity}, rng);
  return ClassifierExtractor(std::move(encoder), std::move(head));
}

Matrix ClassifierExtractor::extract(const Matrix& x) const {
  require(x.rows() == input_dim(), "extract: input dimension mismatch");
  return nn::predict(encoder_, x);
}

Matrix ClassifierExtractor::logits(const Matrix& x) const { return nn::predict(head_, extract(x)); }

std::vector<int> ClassifierExtractor::predict_classes(const Matrix& x) const {
  const Matrix z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    Eigen::Index best = 0;
    z.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

void ClassifierExtractor::store(nn::Checkpoint& ckpt) const {
  nlohmann::json meta;
  meta["kind"] = kind();
  meta["input_dim"] = input_dim();
  meta["encoder"] = nn::store_network(ckpt, "encoder", encoder_);
  meta["head"] = nn::store_network(ckpt, "head", head_);
  ckpt.set_text(kMetaKey, meta.dump());
}

ClassifierExtractor ClassifierExtractor::restore(const nn::Checkpoint& ckpt) {
  if (!ckpt.has_text(kMetaKey)) throw FormatError("checkpoint holds no extractor");
  try {
    const auto meta = nlohmann::json::parse(ckpt.text(kMetaKey));
    if (meta.at("kind") != "classifier") {
      throw FormatError("checkpoint extractor is not a classifier");
    }
    return ClassifierExtractor(nn::load_network(ckpt, "encoder", meta.at("encoder")),
                               nn::load_network(ckpt, "head", meta.at("head")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("classifier metadata: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("classifier metadata: ") + e.what());
  }
}

ClassifierGradients cross_entropy_gradients(const ClassifierExtractor& model, const Matrix& x,
                                            std::span<const int> classes) {
  require(static_cast<std::size_t>(x.cols()) == classes.size() && !classes.empty(),
          "cross_entropy_gradients: one class per column required");
  const double n = static_cast<double>(x.cols());
  auto enc = nn::forward(model.encoder(), x, nn::Mode::kEval, nullptr);
  auto head = nn::forward(model.head(), enc.output, nn::Mode::kEval, nullptr);

  Matrix dlogits(head.output.rows(), head.output.cols());
  ClassifierGradients out;
  for (Eigen::Index j = 0; j < head.output.cols(); ++j) {
    const int c = classes[static_cast<std::size_t>(j)];
    require(c >= 0 && c < model.num_classes(), "cross_entropy_gradients: class out of range");
    const auto z = head.output.col(j);
    const double top = z.maxCoeff();
    const Vector e = (z.array() - top).exp();
    const double sum = e.sum();
    out.loss += (std::log(sum) + top - z(c)) / n;
    dlogits.col(j) = e / (sum * n);
    dlogits(c, j) -= 1.0 / n;
  }
  out.head = nn::backward(model.head(), head.tape, dlogits);
  out.encoder = nn::backward(model.encoder(), enc.tape, out.head.input);
  return out;
}

ClassifierTrainResult train_classifier(const Matrix& x, std::span<const int> classes,
                                       int num_classes, const ClassifierTrainConfig& cfg) {
  require(x.cols() >= 1 && static_cast<std::size_t>(x.cols()) == classes.size(),
          "train_classifier: one class per sample required");
  require(cfg.batch_size >= 1 && cfg.epochs >= 0, "train_classifier: bad batch size or epochs");
  Rng init_rng(derive_seed(cfg.seed, "classifier.init"));
  Rng shuffle_rng(derive_seed(cfg.seed, "classifier.shuffle"));
  ClassifierTrainResult result{
      ClassifierExtractor::create(static_cast<int>(x.rows()), num_classes, init_rng), {}};
  auto& model = result.model;
  auto enc_state = nn::SgdState::for_network(model.encoder(), cfg.lr, cfg.momentum,
                                             cfg.weight_decay);
  auto head_state = nn::SgdState::for_network(model.head(), cfg.lr, cfg.momentum, cfg.weight_decay);

  const std::size_t n = classes.size();
  const std::size_t m = std::min(n, static_cast<std::size_t>(cfg.batch_size));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    enc_state.lr = head_state.lr =
        nn::step_decay_lr(cfg.lr, cfg.lr_decay_epochs, cfg.lr_decay_factor, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += m, ++iteration) {
      const std::size_t count = std::min(m, n - start);
      Matrix batch(x.rows(), static_cast<Eigen::Index>(count));
      std::vector<int> batch_classes(count);
      for (std::size_t j = 0; j < count; ++j) {
        batch.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(order[start + j]));
        batch_classes[j] = classes[order[start + j]];
      }
      const auto g = cross_entropy_gradients(model, batch, batch_classes);
      if (!std::isfinite(g.loss)) {
        throw NumericalFailure("train_classifier: non-finite loss at iteration " +
                               std::to_string(iteration));
      }
      result.loss_history.push_back(g.loss);
      nn::sgd_step(model.mutable_encoder(), g.encoder, enc_state);
      nn::sgd_step(model.mutable_head(), g.head, head_state);
    }
  }
  return result;
}

}  // namespace cdrs::feature
