#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rarecorpus {

/// A lowercase word token and its position in scalar-value offsets.
struct TokenSpan {
  std::string text;
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
};

/// Maximal runs of letters, digits and apostrophes, lowercased.
std::vector<TokenSpan> token_spans(std::string_view text);

/// token_spans without the offsets.
std::vector<std::string> word_tokens(std::string_view text);

}  // namespace rarecorpus
