#include "rarecorpus/text.hpp"

#include "rarecorpus/unicode.hpp"

namespace rarecorpus {

std::vector<TokenSpan> token_spans(std::string_view text) {
  const std::u32string scalars = unicode::decode_utf8(text);
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < scalars.size()) {
    if (!unicode::is_token_char(scalars[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < scalars.size() && unicode::is_token_char(scalars[i])) ++i;
    std::u32string lowered = unicode::to_lower(std::u32string_view(scalars).substr(begin, i - begin));
    for (auto& cp : lowered) {
      if (cp == 0x2019) cp = U'\'';
    }
    out.push_back({unicode::encode_utf8(lowered), begin, i});
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& token : token_spans(text)) out.push_back(std::move(token.text));
  return out;
}

}  // namespace rarecorpus
