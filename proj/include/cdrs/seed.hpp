#pragma once

#include <cstdint>
#include <string_view>

namespace cdrs {

/// Stable per-component seed: FNV-1a over the component name and the label's
/// IEEE-754 bit pattern, folded into the master seed with a SplitMix64 finalizer.
/// The value depends only on its arguments, never on call order or thread.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component, double label = 0.0);

}  // namespace cdrs
