#include "cdrs/cdre/ratio_model.hpp"

#include <cmath>

#include "cdrs/error.hpp"

namespace cdrs::cdre {

namespace {
constexpr const char* kMetaKey = "ratio_model";
}

RatioModel::RatioModel(int feature_dim, ConditionEmbedding embedding, nn::MlpNetwork net,
                       LabelNormalizer normalizer)
    : feature_dim_(feature_dim),
      embedding_(std::move(embedding)),
      net_(std::move(net)),
      normalizer_(normalizer) {
  require(feature_dim_ >= 1, "RatioModel: feature_dim must be positive");
  require(net_.input_dim() == feature_dim_ + embedding_.width(),
          "RatioModel: network input width must equal feature_dim + embedding width");
  require(net_.output_dim() == 1, "RatioModel: network must have a single output");
  require(net_.final_activation() == nn::Activation::kNonneg,
          "RatioModel: final activation must be nonneg");
}

RatioModel RatioModel::create(const RatioModelSpec& spec, Rng& rng) {
  nn::MlpSpec mlp{spec.feature_dim + spec.embedding.width(), spec.hidden, 1, spec.norm_groups,
                  spec.dropout_rate, nn::Activation::kNonneg};
  nn::MlpNetwork net(mlp, rng);
  net.mutable_layers().back().bias.setConstant(spec.output_bias);
  return RatioModel(spec.feature_dim, spec.embedding, std::move(net));
}

Matrix RatioModel::assemble_input(const Matrix& features, std::span<const double> labels) const {
  require(features.rows() == feature_dim_,
          "RatioModel: feature dimension " + std::to_string(features.rows()) + " != " +
              std::to_string(feature_dim_));
  require(static_cast<std::size_t>(features.cols()) == labels.size(),
          "RatioModel: one label per feature column required");
  std::vector<double> coded(labels.begin(), labels.end());
  if (embedding_.mode() == EmbeddingMode::kContinuous) {
    for (double& y : coded) y = normalizer_.normalize(y);
  }
  Matrix input(feature_dim_ + embedding_.width(), features.cols());
  input.topRows(feature_dim_) = features;
  input.bottomRows(embedding_.width()) = embedding_.embed_batch(coded);
  return input;
}

double RatioModel::score(const Vector& h, double y) const {
  const double labels[1] = {y};
  return score_batch(Matrix(h), labels)(0);
}

Vector RatioModel::score_batch(const Matrix& features, std::span<const double> labels) const {
  return nn::predict(net_, assemble_input(features, labels)).row(0).transpose();
}

Vector RatioModel::score_batch(const Matrix& features, double y) const {
  const std::vector<double> labels(static_cast<std::size_t>(features.cols()), y);
  return score_batch(features, labels);
}

Vector RatioModel::score_each(const Matrix& features, std::span<const double> labels) const {
  const Matrix input = assemble_input(features, labels);
  Vector out(input.cols());
  for (Eigen::Index j = 0; j < input.cols(); ++j) {
    out(j) = nn::predict(net_, input.col(j))(0, 0);
  }
  return out;
}

void RatioModel::store(nn::Checkpoint& ckpt) const {
  nlohmann::json meta;
  meta["kind"] = "ratio_model";
  meta["feature_dim"] = feature_dim_;
  meta["embedding"] = embedding_.to_json();
  meta["label_normalizer"] = normalizer_.to_json();
  meta["trained_with_filter"] = std::isfinite(trained_zeta_);
  meta["zeta"] = std::isfinite(trained_zeta_) ? nlohmann::json(trained_zeta_) : nlohmann::json();
  meta["net"] = nn::store_network(ckpt, "ratio", net_);
  ckpt.set_text(kMetaKey, meta.dump());
}

RatioModel RatioModel::restore(const nn::Checkpoint& ckpt) {
  if (!ckpt.has_text(kMetaKey)) throw FormatError("checkpoint holds no ratio model");
  try {
    const auto meta = nlohmann::json::parse(ckpt.text(kMetaKey));
    RatioModel model(meta.at("feature_dim").get<int>(),
                     ConditionEmbedding::from_json(meta.at("embedding")),
                     nn::load_network(ckpt, "ratio", meta.at("net")),
                     LabelNormalizer::from_json(meta.at("label_normalizer")));
    if (meta.at("trained_with_filter").get<bool>()) {
      model.set_trained_zeta(meta.at("zeta").get<double>());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ratio model metadata: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("ratio model metadata: ") + e.what());
  }
}

void RatioModel::save(const std::filesystem::path& path) const {
  nn::Checkpoint ckpt;
  store(ckpt);
  ckpt.save(path);
}

RatioModel RatioModel::load(const std::filesystem::path& path) {
  return restore(nn::Checkpoint::load(path));
}

}  // namespace cdrs::cdre
