#include "halluc/util.hpp"

#include <boost/locale.hpp>

#include <bit>
#include <cstring>

#include "halluc/error.hpp"

namespace halluc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kStorage: return "storage";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kCorruptFile: return "corrupt-file";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kDegenerateEmbedding: return "degenerate-embedding";
    case ErrorCode::kMissingData: return "missing-data";
    case ErrorCode::kInvalidPair: return "invalid-pair";
    case ErrorCode::kDistractorCollision: return "distractor-collision";
    case ErrorCode::kInvalidSpec: return "invalid-spec";
    case ErrorCode::kEmptyTask: return "empty-task";
    case ErrorCode::kIncompleteGroup: return "incomplete-group";
    case ErrorCode::kJoin: return "join";
    case ErrorCode::kProvider: return "provider";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kInput: return "input";
  }
  return "unknown";
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::span<const float> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (float v : values) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::uint64_t fnv1a64(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::uint64_t hash_fields(std::initializer_list<std::string_view> fields) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto f : fields) {
    h = fnv1a64(f, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return h;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) fail(ErrorCode::kInput, "Rng::index: empty range");
  const std::uint64_t bound = n;
  // Rejection sampling on the top of the range removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return static_cast<std::size_t>(draw % bound);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  h = fnv1a64(key, h);
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

namespace {

const std::locale& folding_locale() {
  static const std::locale loc = [] {
    boost::locale::generator gen;
    return gen("en_US.UTF-8");
  }();
  return loc;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::string normalize_label(std::string_view text) {
  std::string folded;
  try {
    folded = boost::locale::fold_case(std::string(text), folding_locale());
  } catch (const std::exception&) {
    // Invalid UTF-8: fall back to ASCII folding.
    folded.assign(text);
    for (auto& c : folded) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
  }
  std::string out;
  out.reserve(folded.size());
  bool pending_space = false;
  for (char c : folded) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace halluc
