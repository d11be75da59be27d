#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace halluc {

/// 64-bit FNV-1a. Stable across platforms; used for ids and checksums.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::span<const float> values);
std::uint64_t fnv1a64(std::span<const double> values);

std::string to_hex(std::uint64_t value);

/// Hash of a sequence of fields with an unambiguous separator.
std::uint64_t hash_fields(std::initializer_list<std::string_view> fields);

/// Deterministic RNG. The standard distributions are implementation-defined,
/// so bounded draws and shuffles are done here to keep outputs identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derive a sub-seed for one generation unit from a run seed and a key.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

/// Case-fold (full Unicode folding) and collapse runs of whitespace to a
/// single ASCII space, trimming both ends.
std::string normalize_label(std::string_view text);

}  // namespace halluc
