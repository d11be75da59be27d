#include "halluc/scoring.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "halluc/error.hpp"

namespace halluc {
namespace {

std::string mcq_text(const std::optional<char>& letter) {
  return letter ? std::string(1, *letter) : std::string("Unparsed");
}

// Scores one scene description; provider failures score 0 and are flagged.
double desc_or_zero(std::string_view pred, std::string_view truth,
                    const EmbeddingProvider& provider, const DescConfig& cfg,
                    ItemVerdict& verdict, std::size_t& failures) {
  try {
    return score_desc_one(pred, truth, provider, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kProvider) throw;
    verdict.flags.push_back(std::string("provider_error: ") + e.what());
    ++failures;
    return 0.0;
  }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json optional_percent(const std::optional<double>& v) {
  if (!v) return nullptr;
  // Two decimals, as printed in result tables.
  return std::round(*v * 10000.0) / 100.0;
}

}  // namespace

bool binary_group_correct(YesNo on_owner, YesNo on_other) {
  return on_owner == YesNo::kYes && on_other == YesNo::kNo;
}

ScoreReport score_run(const std::vector<QAItem>& manifest,
                      const std::vector<ModelResponse>& responses,
                      const EmbeddingProvider& provider, const DescConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!by_id.emplace(manifest[i].qa_id, i).second) {
      fail(ErrorCode::kInput, "duplicate qa_id in manifest: " + manifest[i].qa_id);
    }
  }

  std::vector<const std::string*> reply(manifest.size(), nullptr);
  std::vector<std::string> orphans;
  for (const auto& r : responses) {
    auto it = by_id.find(r.qa_id);
    if (it == by_id.end() || reply[it->second] != nullptr) {
      orphans.push_back(r.qa_id);
      continue;
    }
    reply[it->second] = &r.raw_text;
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& id : orphans) list += (list.empty() ? "" : ", ") + id;
    fail(ErrorCode::kJoin, "responses without a unique manifest item: " + list);
  }

  ScoreReport report;
  report.desc_config = cfg;
  report.provider_name = provider.name();
  report.items.resize(manifest.size());

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> binary_groups;
  std::map<std::string, std::vector<std::size_t>> mcq_pairs;
  std::size_t mcq_correct = 0, sorting_correct = 0;
  double desc_sum = 0.0;

  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& item = manifest[i];
    auto& v = report.items[i];
    v.qa_id = item.qa_id;
    v.kind = item.kind;
    v.expected = item.answer;
    const std::string_view text = reply[i] ? std::string_view(*reply[i]) : std::string_view{};
    if (!reply[i]) v.flags.push_back("missing_response");

    switch (item.kind) {
      case QuestionKind::kBinary: {
        const auto parsed = parse_binary(text);
        v.parsed = to_string(parsed);
        v.unparsed = parsed == YesNo::kUnparsed;
        v.correct = v.parsed == item.answer;
        ++report.binary.items;
        binary_groups[{item.pair_id, item.action}].push_back(i);
        break;
      }
      case QuestionKind::kMcq: {
        const auto parsed = parse_mcq(text, item.choices);
        v.parsed = mcq_text(parsed);
        v.unparsed = !parsed;
        v.correct = v.parsed == item.answer;
        ++report.mcq.items;
        mcq_correct += v.correct;
        mcq_pairs[item.pair_id].push_back(i);
        break;
      }
      case QuestionKind::kSorting: {
        const auto parsed =
            parse_sorting(text, item.sorting_actions.at(0), item.sorting_actions.at(1));
        v.parsed = to_string(parsed);
        v.unparsed = parsed == SortingAnswer::kUnparsed;
        v.correct = v.parsed == item.answer;
        ++report.sorting.items;
        sorting_correct += v.correct;
        if (parsed == SortingAnswer::kOnlyA || parsed == SortingAnswer::kOnlyB) {
          ++report.tsh_single_action;
        }
        break;
      }
      case QuestionKind::kOpenSth: {
        const auto parsed = parse_sth(text);
        v.parsed = std::string(to_string(parsed.change));
        if (parsed.change == YesNo::kYes) {
          v.parsed += "; from " + parsed.scene_from + " to " + parsed.scene_to;
        }
        v.unparsed = parsed.change == YesNo::kUnparsed;
        ++report.sth.items;
        const bool actual = item.answer == "Yes";
        const bool predicted = parsed.change == YesNo::kYes;
        v.correct = actual == predicted;
        auto& c = report.sth_confusion;
        (actual ? (predicted ? c.n11 : c.n10) : (predicted ? c.n01 : c.n00)) += 1;
        if (actual) {
          const std::string_view pred_from =
              predicted ? std::string_view(parsed.scene_from) : std::string_view{};
          const std::string_view pred_to =
              predicted ? std::string_view(parsed.scene_to) : std::string_view{};
          v.desc_from = desc_or_zero(pred_from, item.scene_from, provider, cfg, v,
                                     report.provider_failures);
          v.desc_to = desc_or_zero(pred_to, item.scene_to, provider, cfg, v,
                                   report.provider_failures);
          desc_sum += 0.5 * (*v.desc_from + *v.desc_to);
          ++report.sth_desc_items;
        }
        break;
      }
    }
    if (v.unparsed) {
      auto& tally = item.kind == QuestionKind::kBinary  ? report.binary
                    : item.kind == QuestionKind::kMcq   ? report.mcq
                    : item.kind == QuestionKind::kSorting ? report.sorting
                                                          : report.sth;
      ++tally.unparsed;
    }
  }

  if (!binary_groups.empty()) {
    std::map<std::string, std::vector<bool>> pair_groups;
    std::size_t groups_correct = 0;
    for (const auto& [key, members] : binary_groups) {
      if (members.size() != 2 ||
          manifest[members[0]].answer == manifest[members[1]].answer) {
        fail(ErrorCode::kIncompleteGroup, "binary group (" + key.first + ", " + key.second +
                                              ") needs one Yes and one No item");
      }
      const auto& first = report.items[members[0]];
      const auto& second = report.items[members[1]];
      const bool first_is_owner = manifest[members[0]].answer == "Yes";
      const auto as_yes_no = [](const std::string& s) {
        return s == "Yes" ? YesNo::kYes : s == "No" ? YesNo::kNo : YesNo::kUnparsed;
      };
      const bool ok = first_is_owner
                          ? binary_group_correct(as_yes_no(first.parsed), as_yes_no(second.parsed))
                          : binary_group_correct(as_yes_no(second.parsed), as_yes_no(first.parsed));
      groups_correct += ok;
      pair_groups[key.first].push_back(ok);
    }
    std::size_t pairs_correct = 0;
    for (const auto& [pair_id, groups] : pair_groups) {
      if (groups.size() != 2) {
        fail(ErrorCode::kIncompleteGroup, "pair " + pair_id + " needs two binary groups");
      }
      pairs_correct += groups[0] && groups[1];
    }
    report.ach_binary_acc = accuracy(groups_correct, binary_groups.size());
    report.ach_binary_pair_acc = accuracy(pairs_correct, pair_groups.size());
  }

  if (report.mcq.items > 0) {
    std::size_t pairs_correct = 0;
    for (const auto& [pair_id, members] : mcq_pairs) {
      if (members.size() != 2) {
        fail(ErrorCode::kIncompleteGroup, "pair " + pair_id + " needs two MCQ items");
      }
      pairs_correct += report.items[members[0]].correct && report.items[members[1]].correct;
    }
    report.ach_mcq_acc = accuracy(mcq_correct, report.mcq.items);
    report.ach_mcq_pair_acc = accuracy(pairs_correct, mcq_pairs.size());
  }

  if (report.sorting.items > 0) {
    report.tsh_acc = accuracy(sorting_correct, report.sorting.items);
  }

  if (report.sth.items > 0) {
    report.sth_mcc = mcc(report.sth_confusion);
    report.sth_score_cls = score_cls(*report.sth_mcc);
    report.sth_score_desc =
        report.sth_desc_items > 0 ? desc_sum / static_cast<double>(report.sth_desc_items) : 0.0;
    report.sth_score_overall =
        score_overall(*report.sth_score_cls, *report.sth_score_desc, cfg.alpha);
  }
  return report;
}

Json report_to_json(const ScoreReport& r) {
  Json metrics = {{"ach_binary_acc", optional_number(r.ach_binary_acc)},
                  {"ach_binary_pair_acc", optional_number(r.ach_binary_pair_acc)},
                  {"ach_mcq_acc", optional_number(r.ach_mcq_acc)},
                  {"ach_mcq_pair_acc", optional_number(r.ach_mcq_pair_acc)},
                  {"tsh_acc", optional_number(r.tsh_acc)},
                  {"sth_mcc", optional_number(r.sth_mcc)},
                  {"sth_score_cls", optional_number(r.sth_score_cls)},
                  {"sth_score_desc", optional_number(r.sth_score_desc)},
                  {"sth_score_overall", optional_number(r.sth_score_overall)}};
  Json percent = Json::object();
  for (const auto& [key, value] : metrics.items()) {
    if (key == "sth_mcc") continue;
    percent[key] = value.is_null() ? Json(nullptr)
                                   : optional_percent(value.get<double>());
  }
  auto tally = [](const TaskTally& t) {
    return Json{{"items", t.items}, {"unparsed", t.unparsed}};
  };
  Json items = Json::array();
  for (const auto& v : r.items) {
    Json rec = {{"qa_id", v.qa_id},   {"kind", to_string(v.kind)},
                {"expected", v.expected}, {"parsed", v.parsed},
                {"correct", v.correct},   {"unparsed", v.unparsed}};
    if (v.desc_from) rec["desc_from"] = *v.desc_from;
    if (v.desc_to) rec["desc_to"] = *v.desc_to;
    if (!v.flags.empty()) rec["flags"] = v.flags;
    items.push_back(std::move(rec));
  }
  return Json{
      {"metrics", std::move(metrics)},
      {"percent", std::move(percent)},
      {"tasks",
       {{"binary", tally(r.binary)},
        {"mcq", tally(r.mcq)},
        {"sorting", tally(r.sorting)},
        {"open_sth", tally(r.sth)}}},
      {"tsh_single_action", r.tsh_single_action},
      {"sth_confusion",
       {{"n11", r.sth_confusion.n11},
        {"n10", r.sth_confusion.n10},
        {"n01", r.sth_confusion.n01},
        {"n00", r.sth_confusion.n00}}},
      {"sth_desc_items", r.sth_desc_items},
      {"provider_failures", r.provider_failures},
      {"scoring",
       {{"thr_low", r.desc_config.thr_low},
        {"alpha", r.desc_config.alpha},
        {"provider", r.provider_name},
        {"unparsed_sth_counts_as", "No"},
        {"desc_excludes_no_change_items", true}}},
      {"items", std::move(items)}};
}

std::string render_table(const ScoreReport& r) {
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream os;
    if (v) {
      os << std::fixed << std::setprecision(2) << *v * 100.0;
    } else {
      os << "-";
    }
    return os.str();
  };
  std::ostringstream os;
  os << std::left << std::setw(14) << "" << std::setw(12) << "Binary QA" << std::setw(12)
     << "MCQ" << std::setw(12) << "TSH" << std::setw(12) << "STH" << "\n";
  os << std::setw(14) << "accuracy" << std::setw(12) << cell(r.ach_binary_acc)
     << std::setw(12) << cell(r.ach_mcq_acc) << std::setw(12) << cell(r.tsh_acc)
     << std::setw(12) << cell(r.sth_score_overall) << "\n";
  os << std::setw(14) << "pair-strict" << std::setw(12) << cell(r.ach_binary_pair_acc)
     << std::setw(12) << cell(r.ach_mcq_pair_acc) << "\n";
  os << "STH  cls " << cell(r.sth_score_cls) << "  desc " << cell(r.sth_score_desc)
     << "  overall " << cell(r.sth_score_overall) << "  (alpha " << r.desc_config.alpha
     << ", thr_low " << r.desc_config.thr_low << ")\n";
  os << "unparsed  binary " << r.binary.unparsed << "  mcq " << r.mcq.unparsed
     << "  sorting " << r.sorting.unparsed << "  sth " << r.sth.unparsed
     << "  | single-action sorting replies " << r.tsh_single_action << "\n";
  return os.str();
}

void to_json(Json& j, const ModelResponse& r) {
  j = Json{{"qa_id", r.qa_id}, {"raw_text", r.raw_text}};
}

void from_json(const Json& j, ModelResponse& r) {
  j.at("qa_id").get_to(r.qa_id);
  j.at("raw_text").get_to(r.raw_text);
}

}  // namespace halluc
