#include "cdrs/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cdrs/error.hpp"

namespace cdrs::nn {
namespace {

constexpr std::string_view kTextPrefix = "meta:";

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double value) {
  put_le(out, std::bit_cast<std::uint64_t>(value));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string_view get_bytes(std::uint64_t n) {
    need(n);
    auto view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated record");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add_tensor(const std::string& name, Tensor tensor) {
  require(!name.starts_with(kTextPrefix), "checkpoint: tensor names may not start with 'meta:'");
  std::uint64_t count = 1;
  for (auto d : tensor.dims) count *= d;
  require(count == tensor.data.size(), "checkpoint: tensor '" + name + "' dims do not match data");
  if (!tensors_.count(name) && !texts_.count(name)) order_.push_back(name);
  tensors_[name] = std::move(tensor);
}

void Checkpoint::add_matrix(const std::string& name, const Matrix& m) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  add_tensor(name, std::move(t));
}

void Checkpoint::add_vector(const std::string& name, const Vector& v) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  add_tensor(name, std::move(t));
}

void Checkpoint::set_text(const std::string& key, std::string text) {
  const std::string name = std::string(kTextPrefix) + key;
  if (!texts_.count(name)) order_.push_back(name);
  texts_[name] = std::move(text);
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
  return it->second;
}

Matrix Checkpoint::matrix(const std::string& name) const {
  const Tensor& t = tensor(name);
  if (t.dims.size() != 2) throw FormatError("checkpoint: tensor '" + name + "' is not rank 2");
  Matrix m(static_cast<Eigen::Index>(t.dims[0]), static_cast<Eigen::Index>(t.dims[1]));
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[i++];
  return m;
}

Vector Checkpoint::vector(const std::string& name) const {
  const Tensor& t = tensor(name);
  if (t.dims.size() != 1) throw FormatError("checkpoint: tensor '" + name + "' is not rank 1");
  return Eigen::Map<const Vector>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

bool Checkpoint::has_text(const std::string& key) const {
  return texts_.count(std::string(kTextPrefix) + key) > 0;
}

const std::string& Checkpoint::text(const std::string& key) const {
  auto it = texts_.find(std::string(kTextPrefix) + key);
  if (it == texts_.end()) throw FormatError("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

std::string Checkpoint::serialize() const {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& name : order_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    if (auto it = texts_.find(name); it != texts_.end()) {
      put_le<std::uint32_t>(out, 1);
      put_le<std::uint64_t>(out, it->second.size());
      out += it->second;
      continue;
    }
    const Tensor& t = tensors_.at(name);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_le<std::uint64_t>(out, d);
    for (double v : t.data) put_f64(out, v);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(std::string_view bytes) {
  Reader in(bytes);
  const auto magic = in.get_bytes(4);
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic bytes");
  const auto version = in.get_le<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ckpt;
  while (!in.done()) {
    const auto name_len = in.get_le<std::uint32_t>();
    std::string name(in.get_bytes(name_len));
    const auto rank = in.get_le<std::uint32_t>();
    std::vector<std::uint64_t> dims(rank);
    for (auto& d : dims) d = in.get_le<std::uint64_t>();
    if (name.starts_with(kTextPrefix)) {
      if (rank != 1) throw FormatError("checkpoint: text record '" + name + "' must be rank 1");
      ckpt.set_text(name.substr(kTextPrefix.size()), std::string(in.get_bytes(dims[0])));
      continue;
    }
    std::uint64_t count = 1;
    for (auto d : dims) {
      if (d != 0 && count > (std::uint64_t{1} << 40) / d)
        throw FormatError("checkpoint: tensor '" + name + "' is implausibly large");
      count *= d;
    }
    Tensor t;
    t.dims = std::move(dims);
    t.data.resize(count);
    for (auto& v : t.data) v = in.get_f64();
    ckpt.add_tensor(name, std::move(t));
  }
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

nlohmann::json store_network(Checkpoint& ckpt, const std::string& prefix, const MlpNetwork& net) {
  const auto& layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    ckpt.add_matrix(prefix + ".layer" + std::to_string(k) + ".weight", layers[k].weights);
    ckpt.add_vector(prefix + ".layer" + std::to_string(k) + ".bias", layers[k].bias);
  }
  return {{"depth", layers.size()},
          {"norm_groups", net.norm_groups()},
          {"dropout_rate", net.dropout_rate()},
          {"final_activation", to_string(net.final_activation())}};
}

MlpNetwork load_network(const Checkpoint& ckpt, const std::string& prefix,
                        const nlohmann::json& config) {
  try {
    const auto depth = config.at("depth").get<std::size_t>();
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k < depth; ++k) {
      layers.push_back({ckpt.matrix(prefix + ".layer" + std::to_string(k) + ".weight"),
                        ckpt.vector(prefix + ".layer" + std::to_string(k) + ".bias")});
    }
    return MlpNetwork(std::move(layers), config.at("norm_groups").get<int>(),
                      config.at("dropout_rate").get<double>(),
                      activation_from_string(config.at("final_activation").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint: bad network metadata for '" + prefix + "': " + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError("checkpoint: inconsistent network '" + prefix + "': " + e.what());
  }
}

}  // namespace cdrs::nn
