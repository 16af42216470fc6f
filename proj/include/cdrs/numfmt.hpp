#pragma once

#include <string>
#include <string_view>

namespace cdrs {

/// Shortest decimal text that parses back to exactly `v`; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);
/// Inverse of format_double. Throws std::invalid_argument on malformed text.
double parse_double(std::string_view text);

}  // namespace cdrs
