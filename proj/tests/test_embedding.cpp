#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cdrs/cdre/embedding.hpp"
#include "cdrs/error.hpp"

using namespace cdrs;
using namespace cdrs::cdre;

TEST_CASE("one-hot embedding sets exactly one entry") {
  const auto e = ConditionEmbedding::one_hot(4);
  CHECK(e.width() == 4);
  const Vector v = e.embed(2);
  CHECK(v(0) == 0.0);
  CHECK(v(1) == 0.0);
  CHECK(v(2) == 1.0);
  CHECK(v(3) == 0.0);
  for (int c = 0; c < 4; ++c) {
    const Vector u = e.embed(c);
    CHECK(u.sum() == 1.0);
    CHECK(u.maxCoeff() == 1.0);
    CHECK(u.minCoeff() == 0.0);
  }
}

TEST_CASE("one-hot embedding rejects labels outside the class range") {
  const auto e = ConditionEmbedding::one_hot(4);
  CHECK_THROWS_AS(e.embed(4), ContractViolation);
  CHECK_THROWS_AS(e.embed(-1), ContractViolation);
  CHECK_THROWS_AS(e.embed(1.5), ContractViolation);
  CHECK_THROWS_AS(e.embed(std::nan("")), ContractViolation);
}

TEST_CASE("continuous embedding at zero is sin 0, cos 0") {
  const auto e = ConditionEmbedding::continuous({1.0});
  CHECK(e.width() == 2);
  const Vector v = e.embed(0.0);
  CHECK(v(0) == 0.0);
  CHECK(v(1) == 1.0);
}

TEST_CASE("continuous embedding stays in [-1, 1] and rejects labels outside [0, 1]") {
  const auto e = ConditionEmbedding::continuous_octaves(16);
  CHECK(e.width() == 16);
  for (int i = 0; i <= 100; ++i) {
    const Vector v = e.embed(i / 100.0);
    CHECK(v.cwiseAbs().maxCoeff() <= 1.0);
  }
  CHECK_THROWS_AS(e.embed(1.0 + 1e-9), ContractViolation);
  CHECK_THROWS_AS(e.embed(-1e-9), ContractViolation);
  CHECK_THROWS_AS(ConditionEmbedding::continuous_octaves(3), ContractViolation);
}

TEST_CASE("continuous embedding is injective on a 1000-label grid") {
  const auto e = ConditionEmbedding::continuous_octaves(16);
  std::vector<Vector> codes;
  for (int i = 0; i < 1000; ++i) codes.push_back(e.embed(i / 999.0));
  double closest = INFINITY;
  for (std::size_t i = 0; i < codes.size(); ++i)
    for (std::size_t j = i + 1; j < codes.size(); ++j)
      closest = std::min(closest, (codes[i] - codes[j]).norm());
  CHECK(closest > 1e-4);
}

TEST_CASE("batch embedding matches per-label embedding") {
  const auto e = ConditionEmbedding::continuous_octaves(8);
  const std::vector<double> labels{0.0, 0.25, 0.9};
  const Matrix m = e.embed_batch(labels);
  REQUIRE(m.cols() == 3);
  for (int j = 0; j < 3; ++j) CHECK(m.col(j) == e.embed(labels[j]));
}

TEST_CASE("embeddings round-trip through JSON") {
  for (const auto& e : {ConditionEmbedding::one_hot(7), ConditionEmbedding::continuous_octaves(6)}) {
    const auto back = ConditionEmbedding::from_json(e.to_json());
    CHECK(back.mode() == e.mode());
    CHECK(back.width() == e.width());
    CHECK(back.embed(0.0) == e.embed(0.0));
  }
  CHECK_THROWS_AS(ConditionEmbedding::from_json({{"mode", "learned"}}), FormatError);
}

TEST_CASE("label normalizer maps the training range onto [0, 1]") {
  const std::vector<double> ages{1, 30, 60};
  const auto n = LabelNormalizer::fit(ages);
  CHECK(n.normalize(1) == 0.0);
  CHECK(n.normalize(60) == 1.0);
  CHECK(n.normalize(30.5) == doctest::Approx(0.5));
  CHECK(n.denormalize(n.normalize(17)) == doctest::Approx(17));
  const auto back = LabelNormalizer::from_json(n.to_json());
  CHECK(back.min == n.min);
  CHECK(back.max == n.max);
}
