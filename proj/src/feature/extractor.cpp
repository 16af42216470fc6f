#include "cdrs/feature/extractor.hpp"

#include "cdrs/error.hpp"
#include "cdrs/feature/classifier.hpp"
#include "cdrs/feature/sae.hpp"

namespace cdrs::feature {

IdentityExtractor::IdentityExtractor(int dim) : dim_(dim) {
  require(dim >= 1, "IdentityExtractor: dimension must be positive");
}

Matrix IdentityExtractor::extract(const Matrix& x) const {
  require(x.rows() == dim_, "extract: input dimension mismatch");
  return x;
}

void save_extractor(const FeatureExtractor& extractor, const std::filesystem::path& path) {
  nn::Checkpoint ckpt;
  if (const auto* sae = dynamic_cast<const SparseAutoencoder*>(&extractor)) {
    sae->store(ckpt);
  } else if (const auto* clf = dynamic_cast<const ClassifierExtractor*>(&extractor)) {
    clf->store(ckpt);
  } else if (dynamic_cast<const IdentityExtractor*>(&extractor) != nullptr) {
    ckpt.set_text("extractor",
                  nlohmann::json{{"kind", "identity"}, {"input_dim", extractor.input_dim()}}.dump());
  } else {
    throw Unsupported("save_extractor: unknown extractor kind '" + extractor.kind() + "'");
  }
  ckpt.save(path);
}

std::unique_ptr<FeatureExtractor> restore_extractor(const nn::Checkpoint& ckpt) {
  if (!ckpt.has_text("extractor")) throw FormatError("checkpoint holds no extractor");
  std::string kind;
  int input_dim = 0;
  try {
    const auto meta = nlohmann::json::parse(ckpt.text("extractor"));
    kind = meta.at("kind").get<std::string>();
    input_dim = meta.at("input_dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("extractor metadata: ") + e.what());
  }
  if (kind == "identity") return std::make_unique<IdentityExtractor>(input_dim);
  if (kind == "sae") return std::make_unique<SparseAutoencoder>(SparseAutoencoder::restore(ckpt));
  if (kind == "classifier") {
    return std::make_unique<ClassifierExtractor>(ClassifierExtractor::restore(ckpt));
  }
  throw FormatError("unknown extractor kind '" + kind + "'");
}

std::unique_ptr<FeatureExtractor> load_extractor(const std::filesystem::path& path) {
  return restore_extractor(nn::Checkpoint::load(path));
}

}  // namespace cdrs::feature
