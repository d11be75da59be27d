#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "halluc/manifest.hpp"
#include "halluc/pair_miner.hpp"

namespace halluc {

enum class QuestionKind { kBinary, kMcq, kSorting, kOpenSth };

std::string_view to_string(QuestionKind kind);
QuestionKind parse_question_kind(std::string_view name);

struct QAItem {
  std::string qa_id;
  QuestionKind kind = QuestionKind::kBinary;
  std::vector<std::string> video_ref;
  std::string prompt;
  std::vector<std::string> choices;  // mcq: options in letter order A..D
  std::vector<int> choice_order;     // mcq: source slot per letter (0 = correct,
                                     // 1 = other video's action, 2-3 = distractors)
  // Ground truth: "Yes"/"No" (binary, open_sth), "A".."D" (mcq),
  // "AB"/"BA" (sorting).
  std::string answer;
  std::string scene_from;  // open_sth, change only
  std::string scene_to;
  std::string pair_id;
  std::string action;                       // binary: queried; mcq: correct
  std::vector<std::string> sorting_actions; // sorting: {Action A, Action B}
  int template_index = 0;
};

/// A reviewed pair together with its two clips.
struct PairContext {
  CandidatePair pair;
  ClipRecord clip_a;
  ClipRecord clip_b;
};

PairContext make_pair_context(const CandidatePair& pair,
                              const std::vector<ClipRecord>& clips);

std::span<const std::string_view> binary_templates();
std::span<const std::string_view> mcq_stems();

std::string render_binary_prompt(int template_index, std::string_view action);
std::string render_mcq_prompt(int stem_index, std::span<const std::string> choices);
std::string render_sorting_prompt(std::string_view action_a, std::string_view action_b);
std::string render_sth_prompt();

/// Source of the two extra MCQ options.
class DistractorProvider {
 public:
  virtual ~DistractorProvider() = default;
  virtual std::array<std::string, 2> distractors(std::string_view correct,
                                                 std::string_view adversarial,
                                                 std::string_view scene_caption,
                                                 std::uint64_t seed) const = 0;
};

/// Offline provider: draws two labels from a pool of actions belonging to
/// other pairs, keyed by a seeded hash. It filters exact matches only, so a
/// case or spacing variant of a pair action can still collide.
class FallbackDistractorProvider final : public DistractorProvider {
 public:
  explicit FallbackDistractorProvider(std::vector<std::string> action_pool);

  std::array<std::string, 2> distractors(std::string_view correct,
                                         std::string_view adversarial,
                                         std::string_view scene_caption,
                                         std::uint64_t seed) const override;

 private:
  std::vector<std::string> pool_;
};

std::vector<QAItem> gen_binary(const PairContext& ctx, std::uint64_t seed);
std::vector<QAItem> gen_mcq(const PairContext& ctx, const DistractorProvider& provider,
                            std::uint64_t seed);

/// Sorting item with an explicit A/B binding. a_first says whether Action A
/// happens first in the concatenated segment.
QAItem make_sorting_item(const std::string& pair_id, std::vector<std::string> video_ref,
                         const std::string& action_a, const std::string& action_b,
                         bool a_first);
QAItem gen_sorting(const TshEntry& entry, const std::vector<ClipRecord>& clips,
                   std::uint64_t seed);
QAItem gen_sth(const SthSpec& spec);

std::string make_qa_id(const std::string& pair_id, QuestionKind kind,
                       const std::vector<std::string>& video_ref,
                       const std::string& action, int template_index);

struct QuestionSet {
  std::vector<QAItem> items;  // sorted by qa_id
  std::vector<std::string> log;
};

inline constexpr int kMaxDistractorAttempts = 16;

/// Renders every question kind. An MCQ distractor collision is retried with
/// the next seed offset for that pair, and each retry is logged.
QuestionSet build_question_set(const std::vector<PairContext>& accepted,
                               const std::vector<TshEntry>& tsh,
                               const std::vector<SthSpec>& sth,
                               const std::vector<ClipRecord>& clips,
                               const DistractorProvider& provider, std::uint64_t seed);

void to_json(Json& j, const QAItem& q);
void from_json(const Json& j, QAItem& q);

}  // namespace halluc
