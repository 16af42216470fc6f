#include "cdrs/seed.hpp"

#include <bit>

namespace cdrs {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view component, double label) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : component) {
    h ^= c;
    h *= kFnvPrime;
  }
  // Normalize -0.0 so that equal labels always hash equally.
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(label == 0.0 ? 0.0 : label);
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xFF;
    h *= kFnvPrime;
  }
  return splitmix64(master ^ splitmix64(h));
}

}  // namespace cdrs
