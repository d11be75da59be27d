#pragma once

#include <optional>
#include <string>
#include <vector>

#include "halluc/manifest.hpp"
#include "halluc/metrics.hpp"
#include "halluc/parsers.hpp"
#include "halluc/question_gen.hpp"

namespace halluc {

struct ModelResponse {
  std::string qa_id;
  std::string raw_text;
};

/// Per-item audit record.
struct ItemVerdict {
  std::string qa_id;
  QuestionKind kind = QuestionKind::kBinary;
  std::string expected;
  std::string parsed;  // parser output rendered as text
  bool correct = false;
  bool unparsed = false;
  std::optional<double> desc_from;  // open_sth with a change ground truth
  std::optional<double> desc_to;
  std::vector<std::string> flags;
};

struct TaskTally {
  std::size_t items = 0;
  std::size_t unparsed = 0;
};

struct ScoreReport {
  std::optional<double> ach_binary_acc;       // per (pair, action) group
  std::optional<double> ach_binary_pair_acc;  // both groups of a pair
  std::optional<double> ach_mcq_acc;
  std::optional<double> ach_mcq_pair_acc;
  std::optional<double> tsh_acc;
  std::optional<double> sth_mcc;
  std::optional<double> sth_score_cls;
  std::optional<double> sth_score_desc;
  std::optional<double> sth_score_overall;

  TaskTally binary;
  TaskTally mcq;
  TaskTally sorting;
  TaskTally sth;
  std::size_t tsh_single_action = 0;  // OnlyA / OnlyB replies
  ConfusionCounts sth_confusion;
  std::size_t sth_desc_items = 0;     // change ground truths scored for description
  std::size_t provider_failures = 0;

  DescConfig desc_config;
  std::string provider_name;
  std::vector<ItemVerdict> items;  // manifest order
};

/// Joins responses to manifest items and computes every task metric.
/// Items without a response are scored as Unparsed. A response whose qa_id is
/// not in the manifest (or repeats) raises kJoin listing the ids.
ScoreReport score_run(const std::vector<QAItem>& manifest,
                      const std::vector<ModelResponse>& responses,
                      const EmbeddingProvider& provider, const DescConfig& cfg);

/// binary_item_correct: the owner-video answer is Yes and the other is No.
bool binary_group_correct(YesNo on_owner, YesNo on_other);

Json report_to_json(const ScoreReport& report);

/// Headline numbers as percentages in Binary QA / MCQ / TSH / STH columns.
std::string render_table(const ScoreReport& report);

void to_json(Json& j, const ModelResponse& r);
void from_json(const Json& j, ModelResponse& r);

}  // namespace halluc
