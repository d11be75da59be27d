#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "halluc/pair_miner.hpp"

namespace halluc {

/// N_correct / N_total. Throws kEmptyTask when total is 0.
double accuracy(std::size_t n_correct, std::size_t n_total);

/// Binary confusion counts; first digit actual, second predicted (1 = Yes).
struct ConfusionCounts {
  std::uint64_t n11 = 0;
  std::uint64_t n10 = 0;
  std::uint64_t n01 = 0;
  std::uint64_t n00 = 0;

  std::uint64_t total() const { return n11 + n10 + n01 + n00; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Standard Matthews correlation coefficient. Returns 0 when any marginal
/// is empty. Throws kEmptyTask on an all-zero matrix.
double mcc(const ConfusionCounts& counts);

/// ((mcc + 1) / 2)^2
double score_cls(double mcc_value);

double sigmoid(double x);

struct DescConfig {
  double thr_low = 0.5;
  double alpha = 0.6;

  void validate() const;
};

/// Maps a cosine similarity to [0, 1]: 0 at or below thr_low, otherwise the
/// sigmoid rescaled so that S = 1 maps to 1.
double desc_score_from_similarity(double similarity, double thr_low);

/// Sentence -> unit-norm vector. Must be deterministic per string and safe
/// to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(std::string_view sentence) const = 0;
  virtual std::string name() const = 0;
};

/// Exact-string lookup into a precomputed cache. Unknown strings raise
/// kProvider.
class CacheEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit CacheEmbeddingProvider(std::map<std::string, Embedding, std::less<>> entries,
                                  std::string label = "cache");

  /// Loads an index JSON {"tensor": "<file>.vhtn", "sentences": [...]} whose
  /// tensor is N x D with row i holding sentences[i]. The tensor path is
  /// resolved relative to the index file.
  static CacheEmbeddingProvider load(const std::filesystem::path& index_path);

  Embedding embed(std::string_view sentence) const override;
  std::string name() const override { return label_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Embedding, std::less<>> entries_;
  std::string label_;
};

/// Offline fallback: hashed character-trigram counts of the normalized
/// string, L2-normalized. Lexical only; used when no sentence-encoder cache
/// is supplied.
class HashedTrigramProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDim = 2048;
  Embedding embed(std::string_view sentence) const override;
  std::string name() const override { return "hashed-trigram"; }
};

double score_desc_one(std::string_view pred_scene, std::string_view true_scene,
                      const EmbeddingProvider& provider, const DescConfig& cfg);

double score_desc(std::string_view pred_from, std::string_view pred_to,
                  std::string_view truth_from, std::string_view truth_to,
                  const EmbeddingProvider& provider, const DescConfig& cfg);

/// alpha * cls + (1 - alpha) * desc
double score_overall(double cls, double desc, double alpha);

}  // namespace halluc
