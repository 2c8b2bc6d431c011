#include "seamstress/tokens.hpp"

#include <algorithm>

#include "seamstress/text.hpp"

namespace seamstress {

std::size_t estimate_tokens(std::string_view text) {
  // cl100k runs up to ~0.41 tokens per byte on dense C (short identifiers,
  // lots of punctuation), so a quarter per byte is not an upper bound.
  std::size_t by_bytes = (text.size() + 1) / 2;
  return std::max(by_bytes, 5 * count_lines(text));
}

}  // namespace seamstress
