#pragma once

// Binary model container shared by every persisted model.
//
//   "CDRS"                      4 magic bytes
//   u32  format version         little-endian
//   repeated until end of file:
//     u32  name length, then the UTF-8 name
//     u32  rank
//     u64  dims[rank]           little-endian
//     payload                   row-major IEEE-754 f64, little-endian
//
// Records whose name starts with "meta:" are rank-1 text chunks: dims[0] is the
// byte length and the payload is UTF-8 (JSON by convention) instead of f64.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdrs/nn/mlp.hpp"

namespace cdrs::nn {

inline constexpr char kCheckpointMagic[4] = {'C', 'D', 'R', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

class Checkpoint {
 public:
  void add_tensor(const std::string& name, Tensor tensor);
  void add_matrix(const std::string& name, const Matrix& m);
  void add_vector(const std::string& name, const Vector& v);
  void set_text(const std::string& key, std::string text);

  bool has_tensor(const std::string& name) const { return tensors_.count(name) > 0; }
  bool has_text(const std::string& key) const;
  const Tensor& tensor(const std::string& name) const;
  Matrix matrix(const std::string& name) const;
  Vector vector(const std::string& name) const;
  const std::string& text(const std::string& key) const;

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  // Insertion order is preserved on write so files are byte-reproducible.
  std::vector<std::string> order_;
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, std::string> texts_;
};

/// Stores the layers of `net` under `prefix` and returns its hyper-parameters.
nlohmann::json store_network(Checkpoint& ckpt, const std::string& prefix, const MlpNetwork& net);
MlpNetwork load_network(const Checkpoint& ckpt, const std::string& prefix,
                        const nlohmann::json& config);

}  // namespace cdrs::nn
