#include "cdrs/feature/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cdrs/error.hpp"
#include "cdrs/nn/optim.hpp"
#include "cdrs/seed.hpp"

namespace cdrs::feature {

namespace {
constexpr int kWidthMultiplier = 4;
constexpr int kPredictorHidden = 64;
constexpr double kCodeBias = 0.5;
constexpr const char* kMetaKey = "extractor";
}  // namespace

double sae_loss(const Vector& x, const Vector& x_hat, double y, double y_hat, const Vector& h,
                double lambda_prime) {
  require(x.size() == x_hat.size() && x.size() == h.size() && x.size() > 0,
          "sae_loss: x, x_hat and h must share one positive length");
  require(lambda_prime >= 0.0, "sae_loss: lambda_prime must be nonnegative");
  const double d = static_cast<double>(x.size());
  return (x - x_hat).squaredNorm() / d + (y - y_hat) * (y - y_hat) +
         lambda_prime * h.lpNorm<1>() / d;
}

SparseAutoencoder::SparseAutoencoder(nn::MlpNetwork encoder, nn::MlpNetwork decoder,
                                     nn::MlpNetwork predictor)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)), predictor_(std::move(predictor)) {
  const auto d = encoder_.input_dim();
  require(encoder_.output_dim() == d, "SparseAutoencoder: code width must equal input width");
  require(encoder_.final_activation() == nn::Activation::kNonneg,
          "SparseAutoencoder: encoder output must be rectified");
  require(decoder_.input_dim() == d && decoder_.output_dim() == d,
          "SparseAutoencoder: decoder must map D to D");
  require(predictor_.input_dim() == d && predictor_.output_dim() == 1 &&
              predictor_.final_activation() == nn::Activation::kNonneg,
          "SparseAutoencoder: predictor must map D to one rectified output");
}

SparseAutoencoder SparseAutoencoder::create(int input_dim, Rng& rng) {
  require(input_dim >= 1, "SparseAutoencoder: input_dim must be positive");
  const int wide = kWidthMultiplier * input_dim;
  nn::MlpNetwork encoder({input_dim, {wide}, input_dim, 0, 0.0, nn::Activation::kNonneg}, rng);
  nn::MlpNetwork decoder({input_dim, {wide}, input_dim, 0, 0.0, nn::Activation::kIdentity}, rng);
  nn::MlpNetwork predictor(
      {input_dim, {kPredictorHidden}, 1, 0, 0.0, nn::Activation::kNonneg}, rng);
  encoder.mutable_layers().back().bias.setConstant(kCodeBias);
  predictor.mutable_layers().back().bias.setConstant(kCodeBias);
  return SparseAutoencoder(std::move(encoder), std::move(decoder), std::move(predictor));
}

Matrix SparseAutoencoder::extract(const Matrix& x) const {
  require(x.rows() == input_dim(), "extract: input dimension mismatch");
  return nn::predict(encoder_, x);
}

Vector SparseAutoencoder::predict_labels(const Matrix& x) const {
  return nn::predict(predictor_, extract(x)).row(0).transpose();
}

Matrix SparseAutoencoder::reconstruct(const Matrix& x) const {
  return nn::predict(decoder_, extract(x));
}

void SparseAutoencoder::store(nn::Checkpoint& ckpt) const {
  nlohmann::json meta;
  meta["kind"] = kind();
  meta["input_dim"] = input_dim();
  meta["encoder"] = nn::store_network(ckpt, "encoder", encoder_);
  meta["decoder"] = nn::store_network(ckpt, "decoder", decoder_);
  meta["predictor"] = nn::store_network(ckpt, "predictor", predictor_);
  ckpt.set_text(kMetaKey, meta.dump());
}

SparseAutoencoder SparseAutoencoder::restore(const nn::Checkpoint& ckpt) {
  if (!ckpt.has_text(kMetaKey)) throw FormatError("checkpoint holds no extractor");
  try {
    const auto meta = nlohmann::json::parse(ckpt.text(kMetaKey));
    if (meta.at("kind") != "sae") throw FormatError("checkpoint extractor is not an SAE");
    SparseAutoencoder sae(nn::load_network(ckpt, "encoder", meta.at("encoder")),
                          nn::load_network(ckpt, "decoder", meta.at("decoder")),
                          nn::load_network(ckpt, "predictor", meta.at("predictor")));
    if (sae.input_dim() != meta.at("input_dim").get<int>()) {
      throw FormatError("SAE input_dim disagrees with its encoder");
    }
    return sae;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SAE metadata: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("SAE metadata: ") + e.what());
  }
}

SaeGradients sae_loss_gradients(const SparseAutoencoder& sae, const Matrix& x,
                                std::span<const double> labels, double lambda_prime,
                                nn::Mode mode, Rng* rng) {
  require(x.rows() == sae.input_dim(), "sae_loss_gradients: input dimension mismatch");
  require(static_cast<std::size_t>(x.cols()) == labels.size() && !labels.empty(),
          "sae_loss_gradients: one label per column required");
  const double n = static_cast<double>(x.cols());
  const double d = static_cast<double>(x.rows());
  const Eigen::Map<const Eigen::RowVectorXd> y(labels.data(), x.cols());

  auto enc = nn::forward(sae.encoder(), x, mode, rng);
  const Matrix& h = enc.output;
  auto dec = nn::forward(sae.decoder(), h, mode, rng);
  auto pred = nn::forward(sae.predictor(), h, mode, rng);

  const Matrix recon_err = dec.output - x;
  const Eigen::RowVectorXd label_err = pred.output.row(0) - y;
  SaeGradients out;
  out.loss = (recon_err.squaredNorm() / d + label_err.squaredNorm() +
              lambda_prime * h.cwiseAbs().sum() / d) /
             n;

  out.decoder = nn::backward(sae.decoder(), dec.tape, recon_err * (2.0 / (n * d)));
  out.predictor = nn::backward(sae.predictor(), pred.tape, label_err * (2.0 / n));
  Matrix dh = out.decoder.input + out.predictor.input;
  dh += h.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }) *
        (lambda_prime / (n * d));
  out.encoder = nn::backward(sae.encoder(), enc.tape, dh);
  return out;
}

std::vector<double> train_sae(SparseAutoencoder& sae, const Matrix& x,
                              std::span<const double> labels, const SaeTrainConfig& cfg) {
  require(x.rows() == sae.input_dim(), "train_sae: input dimension mismatch");
  require(x.cols() >= 1 && static_cast<std::size_t>(x.cols()) == labels.size(),
          "train_sae: one label per sample required");
  for (double y : labels) {
    require(y >= 0.0 && y <= 1.0, "train_sae: labels must be normalized to [0, 1]");
  }
  require(cfg.lambda_prime >= 0.0, "train_sae: lambda_prime must be nonnegative");
  require(cfg.batch_size >= 1 && cfg.epochs >= 0, "train_sae: bad batch size or epoch count");

  Rng shuffle_rng(derive_seed(cfg.seed, "sae.shuffle"));
  auto enc_state = nn::SgdState::for_network(sae.encoder(), cfg.lr, cfg.momentum, cfg.weight_decay);
  auto dec_state = nn::SgdState::for_network(sae.decoder(), cfg.lr, cfg.momentum, cfg.weight_decay);
  auto pred_state =
      nn::SgdState::for_network(sae.predictor(), cfg.lr, cfg.momentum, cfg.weight_decay);

  const std::size_t n = labels.size();
  const std::size_t m = std::min(n, static_cast<std::size_t>(cfg.batch_size));
  const std::size_t iters_per_epoch = (n + m - 1) / m;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  Matrix batch(x.rows(), static_cast<Eigen::Index>(m));
  std::vector<double> batch_labels(m);
  std::size_t iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = nn::step_decay_lr(cfg.lr, cfg.lr_decay_epochs, cfg.lr_decay_factor, epoch);
    enc_state.lr = dec_state.lr = pred_state.lr = lr;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t it = 0; it < iters_per_epoch; ++it, ++iteration) {
      const std::size_t start = it * m;
      const std::size_t count = std::min(m, n - start);
      batch.resize(x.rows(), static_cast<Eigen::Index>(count));
      batch_labels.resize(count);
      for (std::size_t j = 0; j < count; ++j) {
        batch.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(order[start + j]));
        batch_labels[j] = labels[order[start + j]];
      }
      SaeGradients g;
      try {
        g = sae_loss_gradients(sae, batch, batch_labels, cfg.lambda_prime, nn::Mode::kEval,
                               nullptr);
      } catch (const NumericalFailure& e) {
        throw NumericalFailure("train_sae: iteration " + std::to_string(iteration) + ": " +
                               e.what());
      }
      if (!std::isfinite(g.loss)) {
        throw NumericalFailure("train_sae: non-finite loss at iteration " +
                               std::to_string(iteration));
      }
      history.push_back(g.loss);
      nn::sgd_step(sae.mutable_encoder(), g.encoder, enc_state);
      nn::sgd_step(sae.mutable_decoder(), g.decoder, dec_state);
      nn::sgd_step(sae.mutable_predictor(), g.predictor, pred_state);
    }
    spdlog::debug("train_sae: epoch {} lr {:.3g} loss {:.6f}", epoch, lr,
                  history.empty() ? 0.0 : history.back());
  }
  return history;
}

SaeTrainResult train_sae(const Matrix& x, std::span<const double> labels,
                         const SaeTrainConfig& cfg) {
  Rng init_rng(derive_seed(cfg.seed, "sae.init"));
  SaeTrainResult result{SparseAutoencoder::create(static_cast<int>(x.rows()), init_rng), {}};
  result.loss_history = train_sae(result.model, x, labels, cfg);
  return result;
}

}  // namespace cdrs::feature
