#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace rarecorpus::unicode {

// All offsets exchanged with annotators are Unicode scalar-value offsets into
// the cleaned UTF-8 text. These helpers convert between the two views.

/// Decodes UTF-8; invalid sequences become U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// Number of scalar values in a UTF-8 string.
std::size_t scalar_length(std::string_view text);

/// NFC normalization (ICU backed).
std::string normalize_nfc(std::string_view text);

/// Letters and digits of any script, plus ASCII and typographic apostrophes.
bool is_token_char(char32_t cp);
bool is_whitespace(char32_t cp);

/// Simple (one-to-one) lowercase mapping.
char32_t to_lower(char32_t cp);
std::u32string to_lower(std::u32string_view text);

/// True when the string decodes as well-formed UTF-8.
bool is_valid_utf8(std::string_view text);

}  // namespace rarecorpus::unicode
