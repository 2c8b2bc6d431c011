#pragma once

#include <cstddef>
#include <string_view>

namespace seamstress {

/// Over-estimating token count: ceil(bytes / 2), but never below 5 per line.
/// Monotone in the text.
std::size_t estimate_tokens(std::string_view text);

}  // namespace seamstress
