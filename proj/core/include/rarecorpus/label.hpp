#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rarecorpus {

enum class Label : std::uint8_t { non_hateful = 0, hateful = 1 };

constexpr bool is_hateful(Label label) noexcept { return label == Label::hateful; }
constexpr Label to_label(bool hateful) noexcept { return hateful ? Label::hateful : Label::non_hateful; }
constexpr int to_int(Label label) noexcept { return static_cast<int>(label); }

constexpr std::string_view to_string(Label label) noexcept {
  return label == Label::hateful ? "hateful" : "non_hateful";
}

inline std::optional<Label> parse_label(std::string_view text) {
  if (text == "hateful" || text == "1") return Label::hateful;
  if (text == "non_hateful" || text == "0") return Label::non_hateful;
  return std::nullopt;
}

}  // namespace rarecorpus
