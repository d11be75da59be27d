#include "halluc/parsers.hpp"

#include <array>
#include <set>
#include <vector>

#include "halluc/util.hpp"

namespace halluc {
namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_alpha(c) || (c >= '0' && c <= '9'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct Word {
  std::string_view text;
  std::size_t begin;
  std::size_t end;
};

std::vector<Word> words(std::string_view s) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_alpha(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_alpha(s[j])) ++j;
    out.push_back({s.substr(i, j - i), i, j});
    i = j;
  }
  return out;
}

bool standalone_at(std::string_view s, std::size_t pos, std::size_t len) {
  return (pos == 0 || !is_alnum(s[pos - 1])) &&
         (pos + len >= s.size() || !is_alnum(s[pos + len]));
}

// Finds `needle` as a whole-word match in `hay` at or after `from`.
std::size_t find_word(std::string_view hay, std::string_view needle, std::size_t from = 0) {
  if (needle.empty()) return std::string_view::npos;
  for (auto pos = hay.find(needle, from); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1)) {
    if (standalone_at(hay, pos, needle.size())) return pos;
  }
  return std::string_view::npos;
}

std::string_view trim_scene_chars(std::string_view s) {
  auto junk = [](char c) {
    return is_space(c) || c == '\'' || c == '"' || c == '`' || c == '*' || c == ',' ||
           c == ':' || c == '.' || c == ';' || c == '(' || c == ')' || c == '!' || c == '?';
  };
  while (!s.empty() && junk(s.front())) s.remove_prefix(1);
  while (!s.empty() && junk(s.back())) s.remove_suffix(1);
  return s;
}

std::string clean_scene(std::string_view s) {
  s = trim_scene_chars(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') return {};
  const auto lower = ascii_lower(s);
  if (lower == "none" || lower == "n/a") return {};
  return std::string(s);
}

// Strips everything except letters and digits.
std::string alnum_only(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (is_alnum(c)) out.push_back(c);
  }
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view to_string(YesNo v) {
  switch (v) {
    case YesNo::kYes: return "Yes";
    case YesNo::kNo: return "No";
    case YesNo::kUnparsed: return "Unparsed";
  }
  return "Unparsed";
}

std::string_view to_string(SortingAnswer v) {
  switch (v) {
    case SortingAnswer::kAB: return "AB";
    case SortingAnswer::kBA: return "BA";
    case SortingAnswer::kOnlyA: return "OnlyA";
    case SortingAnswer::kOnlyB: return "OnlyB";
    case SortingAnswer::kUnparsed: return "Unparsed";
  }
  return "Unparsed";
}

YesNo parse_binary(std::string_view raw_text) noexcept {
  try {
    const auto lower = ascii_lower(raw_text);
    const auto ws = words(lower);
    if (ws.empty()) return YesNo::kUnparsed;
    if (ws.front().text == "yes") return YesNo::kYes;
    if (ws.front().text == "no") return YesNo::kNo;

    const auto sentence_end = lower.find_first_of(".!?\n");
    bool yes_first = false, no_first = false;
    for (const auto& w : ws) {
      if (w.begin >= sentence_end) break;
      yes_first = yes_first || w.text == "yes";
      no_first = no_first || w.text == "no";
    }
    if (yes_first && no_first) return YesNo::kUnparsed;
    for (const auto& w : ws) {
      if (w.text == "yes") return YesNo::kYes;
      if (w.text == "no") return YesNo::kNo;
    }
  } catch (...) {
  }
  return YesNo::kUnparsed;
}

std::optional<char> parse_mcq(std::string_view raw_text,
                              std::span<const std::string> choices) noexcept {
  try {
    // Capitals first; lowercase letters only count when no capital does.
    auto scan = [&](char lo, char hi) {
      std::set<char> letters;
      for (std::size_t i = 0; i < raw_text.size(); ++i) {
        const char c = raw_text[i];
        if (c < lo || c > hi || !standalone_at(raw_text, i, 1)) continue;
        if (i > 0 && raw_text[i - 1] == '\'') continue;  // "I'd"
        if ((c == 'A' || c == 'a') && i + 2 < raw_text.size() && raw_text[i + 1] == ' ' &&
            (lo == 'a' ? is_alpha(raw_text[i + 2]) : raw_text[i + 2] >= 'a' && raw_text[i + 2] <= 'z')) {
          // Article "A <word>" unless it joins letters ("A and B", "A or B").
          const auto rest = ascii_lower(raw_text.substr(i + 2));
          if (!(rest.starts_with("and ") || rest.starts_with("or "))) continue;
        }
        letters.insert(static_cast<char>(c - lo + 'A'));
      }
      return letters;
    };
    auto letters = scan('A', 'D');
    if (letters.empty()) letters = scan('a', 'd');
    if (letters.size() == 1) return *letters.begin();
    if (letters.size() > 1) return std::nullopt;

    const auto bare = alnum_only(raw_text);
    if (bare.size() == 1 && bare[0] >= 'a' && bare[0] <= 'd') {
      return static_cast<char>(bare[0] - 'a' + 'A');
    }

    if (choices.size() == 4) {
      const auto response = normalize_label(trim_scene_chars(raw_text));
      for (std::size_t i = 0; i < 4; ++i) {
        if (!choices[i].empty() && response == normalize_label(choices[i])) {
          return static_cast<char>('A' + i);
        }
      }
      std::optional<char> contained;
      for (std::size_t i = 0; i < 4; ++i) {
        const auto option = normalize_label(choices[i]);
        if (option.empty() || response.find(option) == std::string::npos) continue;
        if (contained) return std::nullopt;
        contained = static_cast<char>('A' + i);
      }
      return contained;
    }
  } catch (...) {
  }
  return std::nullopt;
}

namespace {

struct Mention {
  std::size_t begin;
  std::size_t end;
  int which;  // 0 = A, 1 = B
};

bool is_order_word(std::string_view w) {
  static constexpr std::array<std::string_view, 13> kWords = {
      "before", "after", "then",  "and",     "first",    "happens", "occurs",
      "comes",  "is",    "was",   "followed", "precedes", "follows"};
  for (auto k : kWords) {
    if (w == k) return true;
  }
  return false;
}

std::vector<Mention> find_mentions(std::string_view raw, std::string_view lower,
                                   std::string_view action_a, std::string_view action_b) {
  std::vector<Mention> out;
  // "action a" / "action b" in any case and spacing.
  for (auto pos = find_word(lower, "action"); pos != std::string_view::npos;
       pos = find_word(lower, "action", pos + 1)) {
    std::size_t k = pos + 6;
    while (k < lower.size() && (is_space(lower[k]) || lower[k] == ':')) ++k;
    if (k < lower.size() && (lower[k] == 'a' || lower[k] == 'b') &&
        standalone_at(lower, k, 1)) {
      out.push_back({pos, k + 1, lower[k] == 'a' ? 0 : 1});
    }
  }
  // Bare capital letters, as in "A before B".
  const auto ws = words(raw);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws[i].text != "A" && ws[i].text != "B") continue;
    if (i > 0 && ascii_lower(ws[i - 1].text) == "action") continue;  // counted above
    if (i + 1 < ws.size()) {
      const auto next = ascii_lower(ws[i + 1].text);
      const bool lower_word = ws[i + 1].text.front() >= 'a' && ws[i + 1].text.front() <= 'z';
      if (lower_word && !is_order_word(next)) continue;
    }
    out.push_back({ws[i].begin, ws[i].end, ws[i].text == "A" ? 0 : 1});
  }
  // The bound action strings.
  const std::array<std::string, 2> bound = {collapse_spaces(ascii_lower(action_a)),
                                            collapse_spaces(ascii_lower(action_b))};
  for (int which = 0; which < 2; ++which) {
    const auto& needle = bound[static_cast<std::size_t>(which)];
    if (needle.empty()) continue;
    for (auto pos = find_word(lower, needle); pos != std::string_view::npos;
         pos = find_word(lower, needle, pos + 1)) {
      out.push_back({pos, pos + needle.size(), which});
    }
  }
  return out;
}

}  // namespace

SortingAnswer parse_sorting(std::string_view raw_text, std::string_view action_a,
                            std::string_view action_b) noexcept {
  try {
    // Compact forms: the whole reply is "AB"/"BA", or a single capitalised
    // AB/BA token appears.
    const auto bare = ascii_lower(alnum_only(raw_text));
    if (bare == "ab") return SortingAnswer::kAB;
    if (bare == "ba") return SortingAnswer::kBA;
    const bool has_ab = find_word(raw_text, "AB") != std::string_view::npos;
    const bool has_ba = find_word(raw_text, "BA") != std::string_view::npos;
    if (has_ab != has_ba) return has_ab ? SortingAnswer::kAB : SortingAnswer::kBA;

    const auto lower = collapse_spaces(ascii_lower(raw_text));
    const auto raw = collapse_spaces(raw_text);
    const auto mentions = find_mentions(raw, lower, action_a, action_b);

    struct Keyword {
      std::string_view word;
      bool left_first;
    };
    static constexpr std::array<Keyword, 6> kKeywords = {{{"before", true},
                                                          {"after", false},
                                                          {"followed by", true},
                                                          {"then", true},
                                                          {"precedes", true},
                                                          {"follows", false}}};
    std::size_t best_pos = std::string_view::npos;
    bool left_first = true;
    std::size_t kw_len = 0;
    for (const auto& kw : kKeywords) {
      const auto pos = find_word(lower, kw.word);
      if (pos < best_pos) {
        best_pos = pos;
        left_first = kw.left_first;
        kw_len = kw.word.size();
      }
    }
    if (best_pos != std::string_view::npos) {
      const Mention* left = nullptr;
      const Mention* right = nullptr;
      for (const auto& m : mentions) {
        if (m.end <= best_pos && (!left || m.end > left->end)) left = &m;
        if (m.begin >= best_pos + kw_len && (!right || m.begin < right->begin)) right = &m;
      }
      if (left && right && left->which != right->which) {
        const int first = left_first ? left->which : right->which;
        return first == 0 ? SortingAnswer::kAB : SortingAnswer::kBA;
      }
    }

    bool saw_a = false, saw_b = false;
    for (const auto& m : mentions) {
      saw_a = saw_a || m.which == 0;
      saw_b = saw_b || m.which == 1;
    }
    if (saw_a != saw_b) return saw_a ? SortingAnswer::kOnlyA : SortingAnswer::kOnlyB;
  } catch (...) {
  }
  return SortingAnswer::kUnparsed;
}

SthAnswer parse_sth(std::string_view raw_text) noexcept {
  SthAnswer out;
  try {
    const auto lower = ascii_lower(raw_text);
    std::size_t after_verdict = std::string::npos;
    for (auto pos = find_word(lower, "scene"); pos != std::string::npos;
         pos = find_word(lower, "scene", pos + 1)) {
      std::size_t k = pos + 5;
      while (k < lower.size() && (is_space(lower[k]) || lower[k] == '-' || lower[k] == '_')) {
        ++k;
      }
      if (lower.compare(k, 6, "change") != 0) continue;
      k += 6;
      while (k < lower.size() && !is_alnum(lower[k])) ++k;
      if (lower.compare(k, 3, "yes") == 0 && standalone_at(lower, k, 3)) {
        out.change = YesNo::kYes;
        after_verdict = k + 3;
      } else if (lower.compare(k, 2, "no") == 0 && standalone_at(lower, k, 2)) {
        out.change = YesNo::kNo;
        after_verdict = k + 2;
      } else {
        continue;
      }
      break;
    }
    if (out.change != YesNo::kYes) return out;

    const auto from = find_word(lower, "from", after_verdict);
    if (from == std::string::npos) return out;
    const auto to = find_word(lower, "to", from + 4);
    if (to == std::string::npos) return out;
    auto stop = lower.find_first_of(".;\n", to + 2);
    if (stop == std::string::npos) stop = lower.size();
    out.scene_from = clean_scene(raw_text.substr(from + 4, to - (from + 4)));
    out.scene_to = clean_scene(raw_text.substr(to + 2, stop - (to + 2)));
  } catch (...) {
    return SthAnswer{};
  }
  return out;
}

}  // namespace halluc
