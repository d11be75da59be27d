#pragma once

// Free-text response parsers. Every parser is total: any input string maps
// to a value, and unparseable text maps to the Unparsed variant.

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace halluc {

enum class YesNo { kYes, kNo, kUnparsed };

enum class SortingAnswer { kAB, kBA, kOnlyA, kOnlyB, kUnparsed };

struct SthAnswer {
  YesNo change = YesNo::kUnparsed;
  std::string scene_from;  // empty when absent or a literal placeholder
  std::string scene_to;

  bool operator==(const SthAnswer&) const = default;
};

std::string_view to_string(YesNo v);
std::string_view to_string(SortingAnswer v);

YesNo parse_binary(std::string_view raw_text) noexcept;

/// Letter 'A'..'D', or nullopt for Unparsed.
std::optional<char> parse_mcq(std::string_view raw_text,
                              std::span<const std::string> choices = {}) noexcept;

/// action_a / action_b are the strings bound to Action A / Action B in the
/// prompt; when given they count as mentions of that action.
SortingAnswer parse_sorting(std::string_view raw_text, std::string_view action_a = {},
                            std::string_view action_b = {}) noexcept;

SthAnswer parse_sth(std::string_view raw_text) noexcept;

}  // namespace halluc
