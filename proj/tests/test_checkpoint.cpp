#include <doctest.h>

#include <filesystem>

#include "cdrs/error.hpp"
#include "cdrs/nn/checkpoint.hpp"

using namespace cdrs;
using namespace cdrs::nn;

TEST_CASE("checkpoint layout is bit-exact") {
  Checkpoint ckpt;
  Matrix m(1, 2);
  m << 1.0, -2.0;
  ckpt.add_matrix("w", m);
  ckpt.set_text("model", "{}");
  const std::string bytes = ckpt.serialize();

  std::string expected = "CDRS";
  expected += std::string("\x01\x00\x00\x00", 4);                  // version
  expected += std::string("\x01\x00\x00\x00", 4) + "w";            // name
  expected += std::string("\x02\x00\x00\x00", 4);                  // rank
  expected += std::string("\x01\x00\x00\x00\x00\x00\x00\x00", 8);  // dims
  expected += std::string("\x02\x00\x00\x00\x00\x00\x00\x00", 8);
  expected += std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8);  // 1.0
  expected += std::string("\x00\x00\x00\x00\x00\x00\x00\xc0", 8);  // -2.0
  expected += std::string("\x0a\x00\x00\x00", 4) + "meta:model";
  expected += std::string("\x01\x00\x00\x00", 4);
  expected += std::string("\x02\x00\x00\x00\x00\x00\x00\x00", 8) + "{}";
  CHECK(bytes == expected);
}

TEST_CASE("networks survive a save/load round trip") {
  Rng rng(5);
  MlpNetwork net({6, {16, 8}, 1, 4, 0.5, Activation::kNonneg}, rng);
  Checkpoint ckpt;
  const auto cfg = store_network(ckpt, "ratio", net);
  ckpt.set_text("model", cfg.dump());

  const auto path = std::filesystem::temp_directory_path() / "cdrs_ckpt_roundtrip.cdrs";
  ckpt.save(path);
  const Checkpoint loaded = Checkpoint::load(path);
  std::filesystem::remove(path);

  const MlpNetwork back =
      load_network(loaded, "ratio", nlohmann::json::parse(loaded.text("model")));
  REQUIRE(back.layers().size() == net.layers().size());
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    CHECK(back.layers()[k].weights == net.layers()[k].weights);
    CHECK(back.layers()[k].bias == net.layers()[k].bias);
  }
  CHECK(back.norm_groups() == 4);
  CHECK(back.dropout_rate() == 0.5);
  CHECK(back.final_activation() == Activation::kNonneg);
  CHECK(loaded.serialize() == ckpt.serialize());
  CHECK(loaded.has_text("model"));
  CHECK_FALSE(loaded.has_text("meta:model"));
  CHECK_FALSE(loaded.has_tensor("meta:model"));
}

TEST_CASE("corrupt checkpoints are rejected") {
  CHECK_THROWS_AS(Checkpoint::deserialize("XXXX\x01\x00\x00\x00"), FormatError);
  CHECK_THROWS_AS(Checkpoint::deserialize(std::string("CDRS\x02\x00\x00\x00", 8)), FormatError);
  Checkpoint ckpt;
  ckpt.add_vector("v", Vector::Ones(3));
  std::string bytes = ckpt.serialize();
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_AS(Checkpoint::deserialize(bytes), FormatError);
  CHECK_THROWS_AS(Checkpoint().tensor("nope"), FormatError);
}
