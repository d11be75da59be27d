#include "halluc/question_gen.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "halluc/error.hpp"
#include "halluc/util.hpp"

namespace halluc {
namespace {

constexpr std::string_view kVideoToken = "<Video>\n";

// Question sentences; the action follows each prefix, then "?".
constexpr std::array<std::string_view, 4> kBinaryTemplates = {
    "Is the prominent action in the video ",
    "Does the video primarily feature ",
    "Is the key action shown in the video ",
    "Is the primary action in the video ",
};

constexpr std::array<std::string_view, 4> kMcqStems = {
    "What is the prominent action in the video?",
    "What is the key action shown in the video?",
    "What is the primary action in the video?",
    "What is the predominant action captured in the video?",
};

constexpr std::string_view kBinarySuffix = "Only answer with 'No' or 'Yes'.";

constexpr std::string_view kMcqInstruction =
    " Please select the correct answer (one or more options), only return the "
    "choice letter (i.e., A, B, C, D) of your answer(s).";

constexpr std::string_view kSortingInstruction =
    "Sort these two actions in the order they occur in the video, and return "
    "which action happen before which one. For example, 'Action A before "
    "Action B' or 'Action B before Action A'. If you only detect one action of "
    "these two in the video, return that action.";

constexpr std::string_view kSthPrompt =
    "A scene change is defined as a significant transition in the overall "
    "environment or location within the video. This means a change from one "
    "distinct setting to another, such as moving from a kitchen to a living "
    "room, or from indoors to outdoors. Watch the given video and determine if "
    "a scene change occurs. If there is a scene change, respond in the format: "
    "'Scene change: Yes, Locations: from [location] to [location2].' If no "
    "change occurs, respond: 'Scene change: No, Locations: None'.";

constexpr std::array<char, 4> kLetters = {'A', 'B', 'C', 'D'};

int pick_template(std::uint64_t seed, const std::string& key) {
  Rng rng(derive_seed(seed, key));
  return static_cast<int>(rng.index(4));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::kBinary: return "binary";
    case QuestionKind::kMcq: return "mcq";
    case QuestionKind::kSorting: return "sorting";
    case QuestionKind::kOpenSth: return "open_sth";
  }
  return "binary";
}

QuestionKind parse_question_kind(std::string_view name) {
  if (name == "binary") return QuestionKind::kBinary;
  if (name == "mcq") return QuestionKind::kMcq;
  if (name == "sorting") return QuestionKind::kSorting;
  if (name == "open_sth") return QuestionKind::kOpenSth;
  fail(ErrorCode::kFormat, "unknown question kind: " + std::string(name));
}

PairContext make_pair_context(const CandidatePair& pair,
                              const std::vector<ClipRecord>& clips) {
  const ClipRecord* a = nullptr;
  const ClipRecord* b = nullptr;
  for (const auto& c : clips) {
    if (c.clip_id == pair.clip_a) a = &c;
    if (c.clip_id == pair.clip_b) b = &c;
  }
  if (!a || !b) {
    fail(ErrorCode::kMissingData, "pair " + pair.pair_id() + " references unknown clips");
  }
  return {pair, *a, *b};
}

std::span<const std::string_view> binary_templates() { return kBinaryTemplates; }
std::span<const std::string_view> mcq_stems() { return kMcqStems; }

std::string render_binary_prompt(int template_index, std::string_view action) {
  std::string out(kVideoToken);
  out += kBinaryTemplates.at(static_cast<std::size_t>(template_index));
  out += action;
  out += "?\n";
  out += kBinarySuffix;
  return out;
}

std::string render_mcq_prompt(int stem_index, std::span<const std::string> choices) {
  if (choices.size() != 4) fail(ErrorCode::kInvalidSpec, "mcq needs exactly 4 choices");
  std::string out(kVideoToken);
  out += "\"Question\": \"";
  out += kMcqStems.at(static_cast<std::size_t>(stem_index));
  out += "\"";
  out += kMcqInstruction;
  out += "\n\n\"Choices\":";
  for (std::size_t i = 0; i < 4; ++i) {
    out += "\n\"";
    out += kLetters[i];
    out += "\": \"" + choices[i] + "\"";
  }
  return out;
}

std::string render_sorting_prompt(std::string_view action_a, std::string_view action_b) {
  std::string out(kVideoToken);
  out += "Below are two actions in the video:\nAction A. ";
  out += action_a;
  out += "\nAction B. ";
  out += action_b;
  out += "\n\n";
  out += kSortingInstruction;
  return out;
}

std::string render_sth_prompt() { return std::string(kVideoToken) + std::string(kSthPrompt); }

std::string make_qa_id(const std::string& pair_id, QuestionKind kind,
                       const std::vector<std::string>& video_ref,
                       const std::string& action, int template_index) {
  return "q-" + to_hex(hash_fields({pair_id, to_string(kind), join(video_ref, ">"),
                                    action, std::to_string(template_index)}));
}

FallbackDistractorProvider::FallbackDistractorProvider(std::vector<std::string> action_pool) {
  std::set<std::string> unique;
  for (auto& a : action_pool) {
    if (!a.empty()) unique.insert(std::move(a));
  }
  pool_.assign(unique.begin(), unique.end());
}

std::array<std::string, 2> FallbackDistractorProvider::distractors(
    std::string_view correct, std::string_view adversarial, std::string_view /*caption*/,
    std::uint64_t seed) const {
  std::vector<const std::string*> candidates;
  for (const auto& a : pool_) {
    if (a != correct && a != adversarial) candidates.push_back(&a);
  }
  if (candidates.size() < 2) {
    fail(ErrorCode::kMissingData,
         "distractor pool has fewer than two actions outside the pair");
  }
  Rng rng(derive_seed(seed, std::string(correct) + "\x1f" + std::string(adversarial)));
  const std::size_t first = rng.index(candidates.size());
  std::size_t second = rng.index(candidates.size() - 1);
  if (second >= first) ++second;
  return {*candidates[first], *candidates[second]};
}

std::vector<QAItem> gen_binary(const PairContext& ctx, std::uint64_t seed) {
  if (normalize_label(ctx.clip_a.action) == normalize_label(ctx.clip_b.action)) {
    fail(ErrorCode::kInvalidPair, "pair " + ctx.pair.pair_id() + " has identical actions");
  }
  const std::string pair_id = ctx.pair.pair_id();
  std::vector<QAItem> out;
  for (const ClipRecord* owner : {&ctx.clip_a, &ctx.clip_b}) {
    for (const ClipRecord* video : {&ctx.clip_a, &ctx.clip_b}) {
      QAItem q;
      q.kind = QuestionKind::kBinary;
      q.video_ref = {video->clip_id};
      q.action = owner->action;
      q.pair_id = pair_id;
      q.template_index =
          pick_template(seed, pair_id + "|binary|" + video->clip_id + "|" + owner->action);
      q.prompt = render_binary_prompt(q.template_index, q.action);
      q.answer = owner == video ? "Yes" : "No";
      q.qa_id = make_qa_id(pair_id, q.kind, q.video_ref, q.action, q.template_index);
      out.push_back(std::move(q));
    }
  }
  return out;
}

std::vector<QAItem> gen_mcq(const PairContext& ctx, const DistractorProvider& provider,
                            std::uint64_t seed) {
  if (normalize_label(ctx.clip_a.action) == normalize_label(ctx.clip_b.action)) {
    fail(ErrorCode::kInvalidPair, "pair " + ctx.pair.pair_id() + " has identical actions");
  }
  const std::string pair_id = ctx.pair.pair_id();
  std::vector<QAItem> out;
  for (const auto& [video, other] :
       {std::pair{&ctx.clip_a, &ctx.clip_b}, std::pair{&ctx.clip_b, &ctx.clip_a}}) {
    const std::string key = pair_id + "|mcq|" + video->clip_id;
    auto extra = provider.distractors(video->action, other->action, video->caption,
                                      derive_seed(seed, key + "|distractors"));
    const std::array<std::string, 4> slots = {video->action, other->action, extra[0],
                                              extra[1]};
    std::set<std::string> seen;
    for (const auto& s : slots) {
      if (!seen.insert(normalize_label(s)).second) {
        fail(ErrorCode::kDistractorCollision,
             "option \"" + s + "\" duplicates another option for " + key);
      }
    }

    Rng rng(derive_seed(seed, key + "|order"));
    std::vector<int> order = {0, 1, 2, 3};
    rng.shuffle(order);

    QAItem q;
    q.kind = QuestionKind::kMcq;
    q.video_ref = {video->clip_id};
    q.action = video->action;
    q.pair_id = pair_id;
    q.template_index = pick_template(seed, key + "|stem");
    q.choice_order = order;
    for (std::size_t letter = 0; letter < 4; ++letter) {
      q.choices.push_back(slots[static_cast<std::size_t>(order[letter])]);
      if (order[letter] == 0) q.answer = std::string(1, kLetters[letter]);
    }
    q.prompt = render_mcq_prompt(q.template_index, q.choices);
    q.qa_id = make_qa_id(pair_id, q.kind, q.video_ref, q.action, q.template_index);
    out.push_back(std::move(q));
  }
  return out;
}

QAItem make_sorting_item(const std::string& pair_id, std::vector<std::string> video_ref,
                         const std::string& action_a, const std::string& action_b,
                         bool a_first) {
  QAItem q;
  q.kind = QuestionKind::kSorting;
  q.video_ref = std::move(video_ref);
  q.pair_id = pair_id;
  q.sorting_actions = {action_a, action_b};
  q.action = action_a;
  q.prompt = render_sorting_prompt(action_a, action_b);
  q.answer = a_first ? "AB" : "BA";
  q.qa_id = make_qa_id(pair_id, q.kind, q.video_ref, action_a + ">" + action_b, 0);
  return q;
}

QAItem gen_sorting(const TshEntry& entry, const std::vector<ClipRecord>& clips,
                   std::uint64_t seed) {
  const std::string* first = nullptr;
  const std::string* second = nullptr;
  for (const auto& c : clips) {
    if (c.clip_id == entry.first_clip) first = &c.action;
    if (c.clip_id == entry.second_clip) second = &c.action;
  }
  if (!first || !second) {
    fail(ErrorCode::kMissingData, "tsh entry " + entry.pair.pair_id() +
                                      " references unknown clips");
  }
  const std::string pair_id = entry.pair.pair_id();
  Rng rng(derive_seed(seed, pair_id + "|sorting"));
  const bool first_is_a = rng.index(2) == 0;
  return first_is_a
             ? make_sorting_item(pair_id, entry.sequence(), *first, *second, true)
             : make_sorting_item(pair_id, entry.sequence(), *second, *first, false);
}

QAItem gen_sth(const SthSpec& spec) {
  if (spec.change && (spec.scene_from.empty() || spec.scene_to.empty())) {
    fail(ErrorCode::kInvalidSpec, "change spec " + spec.spec_id + " lacks a scene label");
  }
  if (spec.clip_ids.empty()) {
    fail(ErrorCode::kInvalidSpec, "spec " + spec.spec_id + " has no clips");
  }
  QAItem q;
  q.kind = QuestionKind::kOpenSth;
  q.video_ref = spec.clip_ids;
  q.pair_id = spec.spec_id;
  q.prompt = render_sth_prompt();
  q.answer = spec.change ? "Yes" : "No";
  if (spec.change) {
    q.scene_from = spec.scene_from;
    q.scene_to = spec.scene_to;
  }
  q.qa_id = make_qa_id(q.pair_id, q.kind, q.video_ref, "", 0);
  return q;
}

QuestionSet build_question_set(const std::vector<PairContext>& accepted,
                               const std::vector<TshEntry>& tsh,
                               const std::vector<SthSpec>& sth,
                               const std::vector<ClipRecord>& clips,
                               const DistractorProvider& provider, std::uint64_t seed) {
  QuestionSet out;
  for (const auto& ctx : accepted) {
    auto binary = gen_binary(ctx, seed);
    out.items.insert(out.items.end(), binary.begin(), binary.end());

    for (int attempt = 0;; ++attempt) {
      try {
        auto mcq = gen_mcq(ctx, provider, seed + static_cast<std::uint64_t>(attempt));
        out.items.insert(out.items.end(), mcq.begin(), mcq.end());
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDistractorCollision ||
            attempt + 1 >= kMaxDistractorAttempts) {
          throw;
        }
        out.log.push_back(std::string("distractor collision (") + e.what() +
                          "); retrying pair " + ctx.pair.pair_id() +
                          " with seed offset " + std::to_string(attempt + 1));
      }
    }
  }
  for (const auto& entry : tsh) out.items.push_back(gen_sorting(entry, clips, seed));
  for (const auto& spec : sth) out.items.push_back(gen_sth(spec));

  std::sort(out.items.begin(), out.items.end(),
            [](const auto& x, const auto& y) { return x.qa_id < y.qa_id; });
  for (std::size_t i = 1; i < out.items.size(); ++i) {
    if (out.items[i].qa_id == out.items[i - 1].qa_id) {
      fail(ErrorCode::kInput, "duplicate qa_id " + out.items[i].qa_id);
    }
  }
  return out;
}

void to_json(Json& j, const QAItem& q) {
  j = Json{{"qa_id", q.qa_id},
           {"kind", to_string(q.kind)},
           {"video_ref", q.video_ref},
           {"prompt", q.prompt},
           {"pair_id", q.pair_id},
           {"template_index", q.template_index}};
  Json truth;
  switch (q.kind) {
    case QuestionKind::kBinary:
      j["action"] = q.action;
      truth = {{"answer", q.answer}};
      break;
    case QuestionKind::kMcq:
      j["action"] = q.action;
      j["choices"] = q.choices;
      j["choice_order"] = q.choice_order;
      truth = {{"answer", q.answer}};
      break;
    case QuestionKind::kSorting:
      j["actions"] = q.sorting_actions;
      truth = {{"order", q.answer}};
      break;
    case QuestionKind::kOpenSth:
      truth = {{"change", q.answer}};
      if (q.answer == "Yes") {
        truth["scene_from"] = q.scene_from;
        truth["scene_to"] = q.scene_to;
      }
      break;
  }
  j["ground_truth"] = std::move(truth);
}

void from_json(const Json& j, QAItem& q) {
  j.at("qa_id").get_to(q.qa_id);
  q.kind = parse_question_kind(j.at("kind").get<std::string>());
  j.at("video_ref").get_to(q.video_ref);
  q.prompt = j.value("prompt", std::string{});
  q.pair_id = j.value("pair_id", std::string{});
  q.template_index = j.value("template_index", 0);
  const auto& truth = j.at("ground_truth");
  switch (q.kind) {
    case QuestionKind::kBinary:
      j.at("action").get_to(q.action);
      truth.at("answer").get_to(q.answer);
      break;
    case QuestionKind::kMcq:
      j.at("action").get_to(q.action);
      j.at("choices").get_to(q.choices);
      q.choice_order = j.value("choice_order", std::vector<int>{});
      truth.at("answer").get_to(q.answer);
      if (q.choices.size() != 4) fail(ErrorCode::kFormat, q.qa_id + ": mcq needs 4 choices");
      break;
    case QuestionKind::kSorting:
      j.at("actions").get_to(q.sorting_actions);
      truth.at("order").get_to(q.answer);
      if (q.sorting_actions.size() != 2) {
        fail(ErrorCode::kFormat, q.qa_id + ": sorting needs 2 actions");
      }
      break;
    case QuestionKind::kOpenSth:
      truth.at("change").get_to(q.answer);
      q.scene_from = truth.value("scene_from", std::string{});
      q.scene_to = truth.value("scene_to", std::string{});
      break;
  }
}

}  // namespace halluc
