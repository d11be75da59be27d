#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "halluc/manifest.hpp"
#include "halluc/tensor_store.hpp"

namespace halluc {

struct ClipRecord {
  std::string clip_id;
  std::string source_video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string action;
  std::string scene;  // may be empty
  std::string caption;
  std::int64_t order_index = 0;

  double duration() const { return end_s - start_s; }
};

struct CandidatePair {
  std::string clip_a;  // clip_a < clip_b
  std::string clip_b;
  double sem_sim = 0.0;
  double vis_sim = 0.0;
  bool adjacent = false;
  bool distinct_scene = false;

  std::string pair_id() const { return clip_a + "|" + clip_b; }
  bool operator==(const CandidatePair&) const = default;
};

struct MinerConfig {
  double lambda_sem = 0.9;
  double lambda_vis = 0.6;
  double min_duration_s = 1.0;

  void validate() const;
};

enum class ScanMode {
  kWithinVideo,  // segments of one source video (multi-clip corpora)
  kCrossVideo,   // every clip against every other clip (flat corpora)
};

ScanMode parse_scan_mode(std::string_view name);
std::string_view to_string(ScanMode mode);

using Embedding = std::vector<double>;
using EmbeddingIndex = std::map<std::string, Embedding, std::less<>>;

/// Mean over frames, then L2-normalized.
Embedding pool_video(const EmbeddingMatrix& frames);

/// dot(u, v) / sqrt(|u|^2 |v|^2), clamped to [-1, 1]. Symmetric bit-for-bit.
double cosine(std::span<const double> u, std::span<const double> v);

/// Drops clips shorter than min_duration_s. Throws kInput on end_s <= start_s.
std::vector<ClipRecord> filter_short_clips(const std::vector<ClipRecord>& clips,
                                           double min_duration_s);

/// Pairs with sem cosine >= lambda_sem and vis cosine < lambda_vis, sorted by
/// (clip_a, clip_b). The similarity scan runs under OpenMP; output does not
/// depend on the thread count.
std::vector<CandidatePair> mine_pairs(const std::vector<ClipRecord>& clips,
                                      const EmbeddingIndex& sem,
                                      const EmbeddingIndex& vis,
                                      const MinerConfig& cfg, ScanMode mode);

namespace serial {
std::vector<CandidatePair> mine_pairs(const std::vector<ClipRecord>& clips,
                                      const EmbeddingIndex& sem,
                                      const EmbeddingIndex& vis,
                                      const MinerConfig& cfg, ScanMode mode);
}  // namespace serial

/// Drops pairs whose action labels match after case folding and whitespace
/// normalization.
std::vector<CandidatePair> filter_identical_actions(
    const std::vector<CandidatePair>& pairs, const std::vector<ClipRecord>& clips);

struct TshEntry {
  CandidatePair pair;
  std::string source_video_id;
  std::string first_clip;   // earlier order_index
  std::string second_clip;

  std::vector<std::string> sequence() const { return {first_clip, second_clip}; }
};

std::vector<TshEntry> assemble_tsh(const std::vector<CandidatePair>& pairs,
                                   const std::vector<ClipRecord>& clips);

struct SthSpec {
  std::string spec_id;
  std::vector<std::string> clip_ids;  // concatenation order
  bool change = false;
  std::string scene_from;
  std::string scene_to;
  std::string pair_id;  // empty for single-clip negatives
};

struct SthAssembly {
  std::vector<SthSpec> specs;
  std::vector<std::string> warnings;
};

/// Two change specs (both orders) per distinct-scene pair, balanced by the
/// same number of no-change specs. Equal-scene pairs are preferred as
/// negatives; single clips fill any shortfall.
SthAssembly assemble_sth(const std::vector<CandidatePair>& pairs,
                         const std::vector<ClipRecord>& clips, std::uint64_t seed);

/// Adapter for an external labeller that fills action/scene fields from
/// captions. The pipeline itself reads pre-authored fields.
class AnnotationProvider {
 public:
  virtual ~AnnotationProvider() = default;
  virtual void annotate(ClipRecord& clip) const = 0;
};

void to_json(Json& j, const ClipRecord& c);
void from_json(const Json& j, ClipRecord& c);
void to_json(Json& j, const CandidatePair& p);
void from_json(const Json& j, CandidatePair& p);
void to_json(Json& j, const TshEntry& t);
void from_json(const Json& j, TshEntry& t);
void to_json(Json& j, const SthSpec& s);
void from_json(const Json& j, SthSpec& s);

}  // namespace halluc
