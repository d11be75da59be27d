#include "halluc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "halluc/error.hpp"
#include "halluc/question_gen.hpp"
#include "halluc/scoring.hpp"
#include "halluc/tensor_store.hpp"
#include "halluc/util.hpp"

namespace halluc::cli {
namespace fs = std::filesystem;

namespace {

// Raised inside commands to leave with a specific exit code.
struct ExitWith {
  int code;
  std::string message;
};

[[noreturn]] void exit_with(int code, const std::string& message) {
  throw ExitWith{code, message};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return kExitShape;
    case ErrorCode::kJoin: return kExitJoin;
    case ErrorCode::kEmptyTask: return kExitEmptyPipeline;
    default: return kExitInput;
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) exit_with(kExitInput, what + " not found: " + path.string());
}

template <class T>
std::vector<T> load_records(const fs::path& path, const std::string& what) {
  require_file(path, what);
  std::vector<T> out;
  try {
    for (const auto& rec : read_jsonl(path)) out.push_back(rec.get<T>());
  } catch (const Json::exception& e) {
    exit_with(kExitInput, path.string() + ": malformed " + what + ": " + e.what());
  }
  return out;
}

template <class T>
std::vector<Json> stamp(const std::vector<T>& records, const RunConfig& cfg) {
  std::vector<Json> out;
  out.reserve(records.size());
  const auto hash = cfg.config_hash();
  for (const auto& r : records) {
    Json j = r;
    j["seed"] = cfg.seed;
    j["config_hash"] = hash;
    out.push_back(std::move(j));
  }
  return out;
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

Embedding load_pooled(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    exit_with(kExitInput, "missing embedding file: " + path.string());
  }
  auto tensor = read_tensor(path);
  if (tensor.dims.size() == 1) tensor.dims.insert(tensor.dims.begin(), 1);
  return pool_video(EmbeddingMatrix::from_tensor(std::move(tensor)));
}

// ----------------------------------------------------------------- mine

struct MineArgs {
  std::string clips;
  std::string sem_encoder = "semantic";
  std::string vis_encoder = "visual";
  std::string out_dir;
};

int cmd_mine(const RunConfig& cfg, const MineArgs& args, std::ostream& out, std::ostream& err) {
  const fs::path store = cfg.store_root;
  if (store.empty() || !fs::is_directory(store)) {
    exit_with(kExitInput, "store directory not found: " + store.string());
  }
  const auto clips_path = or_default(args.clips, store / "clips.jsonl");
  const auto out_dir = or_default(args.out_dir, store);
  if (!fs::is_directory(out_dir)) exit_with(kExitInput, "output directory not found: " + out_dir.string());

  const auto all_clips = load_records<ClipRecord>(clips_path, "clip manifest");
  const auto clips = filter_short_clips(all_clips, cfg.miner.min_duration_s);
  if (clips.size() < all_clips.size()) {
    err << "quality filter: dropped " << all_clips.size() - clips.size()
        << " clips shorter than " << cfg.miner.min_duration_s << " s\n";
  }

  EmbeddingIndex sem, vis;
  for (const auto& c : clips) {
    sem.emplace(c.clip_id, load_pooled(store / args.sem_encoder / (c.clip_id + ".vhtn")));
    vis.emplace(c.clip_id, load_pooled(store / args.vis_encoder / (c.clip_id + ".vhtn")));
  }

  const auto mined = mine_pairs(clips, sem, vis, cfg.miner, cfg.scan_mode);
  const auto pairs = filter_identical_actions(mined, clips);
  const auto tsh = assemble_tsh(pairs, clips);
  const auto sth = assemble_sth(pairs, clips, cfg.seed);
  for (const auto& w : sth.warnings) err << "warning: " << w << "\n";
  if (clips.empty()) err << "warning: empty corpus; writing empty manifests\n";

  write_jsonl(out_dir / "pairs.jsonl", stamp(pairs, cfg));
  write_jsonl(out_dir / "tsh.jsonl", stamp(tsh, cfg));
  write_jsonl(out_dir / "sth.jsonl", stamp(sth.specs, cfg));

  out << "clips " << clips.size() << "  candidates " << mined.size() << "  pairs "
      << pairs.size() << "  tsh " << tsh.size() << "  sth " << sth.specs.size() << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- review

constexpr std::array<ReviewReason, 4> kReasonMenu = {
    ReviewReason::kNoClearAction, ReviewReason::kMultipleActions,
    ReviewReason::kIdenticalActions, ReviewReason::kOther};

Json verdict_json(const ReviewVerdict& v) {
  Json j = {{"pair_id", v.pair_id}, {"verdict", v.accept ? "accept" : "reject"}};
  if (!v.accept) j["reason"] = to_string(v.reason);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

void write_verdicts(const fs::path& path, const std::map<std::string, ReviewVerdict>& verdicts,
                    const RunConfig& cfg) {
  std::vector<Json> records;
  for (const auto& [id, v] : verdicts) {
    Json j = verdict_json(v);
    j["seed"] = cfg.seed;
    j["config_hash"] = cfg.config_hash();
    records.push_back(std::move(j));
  }
  write_jsonl(path, records);
}

struct ReviewArgs {
  std::string pairs;
  std::string clips;
  std::string verdicts;
  std::string batch;
};

int cmd_review(const RunConfig& cfg, const ReviewArgs& args, std::istream& in,
               std::ostream& out, std::ostream& err) {
  const fs::path store = cfg.store_root;
  const auto pairs_path = or_default(args.pairs, store / "pairs.jsonl");
  const auto verdict_path = or_default(args.verdicts, store / "verdicts.jsonl");
  const auto pairs = load_records<CandidatePair>(pairs_path, "pair manifest");
  std::set<std::string> known;
  for (const auto& p : pairs) known.insert(p.pair_id());

  std::map<std::string, ReviewVerdict> verdicts;
  if (fs::exists(verdict_path)) {
    for (auto& v : read_verdicts(verdict_path)) verdicts[v.pair_id] = std::move(v);
  }

  if (!args.batch.empty()) {
    require_file(args.batch, "batch verdict file");
    const auto batch = read_verdicts(args.batch);
    for (const auto& v : batch) {
      if (!known.count(v.pair_id)) exit_with(kExitInput, "batch verdict for unknown pair " + v.pair_id);
      if (verdicts.count(v.pair_id)) {
        exit_with(kExitInput, "pair " + v.pair_id + " already has a verdict in " +
                                  verdict_path.string());
      }
    }
    for (const auto& v : batch) verdicts[v.pair_id] = v;
    write_verdicts(verdict_path, verdicts, cfg);
    out << "merged " << batch.size() << " verdicts; " << verdicts.size() << " of "
        << pairs.size() << " pairs reviewed\n";
    return kExitOk;
  }

  std::map<std::string, ClipRecord> clips;
  const auto clips_path = or_default(args.clips, store / "clips.jsonl");
  if (fs::exists(clips_path)) {
    for (auto& c : load_records<ClipRecord>(clips_path, "clip manifest")) {
      clips.emplace(c.clip_id, std::move(c));
    }
  }
  auto show = [&](const std::string& id) {
    auto it = clips.find(id);
    if (it == clips.end()) {
      out << "  " << id << " (no metadata)\n";
      return;
    }
    const auto& c = it->second;
    out << "  " << c.clip_id << "  [" << c.source_video_id << " #" << c.order_index << ", "
        << c.start_s << "-" << c.end_s << " s]\n"
        << "    action:  " << c.action << "\n"
        << "    scene:   " << c.scene << "\n"
        << "    caption: " << c.caption << "\n";
  };

  std::size_t pending = 0;
  for (const auto& p : pairs) pending += !verdicts.count(p.pair_id());
  out << pending << " pairs awaiting review\n";
  for (const auto& p : pairs) {
    if (verdicts.count(p.pair_id())) continue;
    out << "\npair " << p.pair_id() << "  sem " << p.sem_sim << "  vis " << p.vis_sim << "\n";
    show(p.clip_a);
    show(p.clip_b);
    for (;;) {
      out << "[a]ccept | [r]eject 1=no_clear_action 2=multiple_actions "
             "3=identical_actions 4=other [note] | [s]kip | [q]uit > "
          << std::flush;
      std::string line;
      if (!std::getline(in, line)) {
        out << "\ninput closed; progress saved\n";
        return kExitOk;
      }
      std::istringstream words(line);
      std::string cmd;
      words >> cmd;
      if (cmd == "q") return kExitOk;
      if (cmd == "s") break;
      if (cmd == "a") {
        verdicts[p.pair_id()] = {p.pair_id(), true, ReviewReason::kOther, ""};
      } else if (cmd == "r") {
        int choice = 0;
        if (!(words >> choice) || choice < 1 || choice > 4) {
          err << "reject needs a reason number 1-4\n";
          continue;
        }
        std::string note;
        std::getline(words >> std::ws, note);
        verdicts[p.pair_id()] = {p.pair_id(), false,
                                 kReasonMenu[static_cast<std::size_t>(choice - 1)], note};
      } else {
        continue;
      }
      write_verdicts(verdict_path, verdicts, cfg);
      break;
    }
  }
  out << "review complete\n";
  return kExitOk;
}

// ------------------------------------------------------------- generate

struct GenerateArgs {
  std::string pairs;
  std::string tsh;
  std::string sth;
  std::string verdicts;
  std::string clips;
  std::string out;
};

int cmd_generate(const RunConfig& cfg, const GenerateArgs& args, std::ostream& out,
                 std::ostream& err) {
  const fs::path store = cfg.store_root;
  const auto clips = load_records<ClipRecord>(or_default(args.clips, store / "clips.jsonl"),
                                              "clip manifest");
  const auto pairs = load_records<CandidatePair>(or_default(args.pairs, store / "pairs.jsonl"),
                                                 "pair manifest");
  const auto tsh = load_records<TshEntry>(or_default(args.tsh, store / "tsh.jsonl"), "tsh manifest");
  const auto sth = load_records<SthSpec>(or_default(args.sth, store / "sth.jsonl"), "sth manifest");
  const auto verdict_path = or_default(args.verdicts, store / "verdicts.jsonl");
  require_file(verdict_path, "verdict file");

  std::set<std::string> accepted_ids;
  for (const auto& v : read_verdicts(verdict_path)) {
    if (v.accept) accepted_ids.insert(v.pair_id);
  }
  std::vector<PairContext> accepted;
  for (const auto& p : pairs) {
    if (accepted_ids.count(p.pair_id())) accepted.push_back(make_pair_context(p, clips));
  }
  if (accepted.empty()) exit_with(kExitEmptyPipeline, "no accepted pairs; run review first");

  std::vector<TshEntry> tsh_kept;
  for (const auto& t : tsh) {
    if (accepted_ids.count(t.pair.pair_id())) tsh_kept.push_back(t);
  }
  // Drop specs from rejected pairs, then restore the Yes/No balance.
  std::vector<SthSpec> yes, no;
  for (const auto& s : sth) {
    if (!s.pair_id.empty() && !accepted_ids.count(s.pair_id)) continue;
    (s.change ? yes : no).push_back(s);
  }
  const auto balanced = std::min(yes.size(), no.size());
  if (yes.size() != no.size()) {
    err << "sth: trimming to " << balanced << " change / " << balanced
        << " no-change specs after review\n";
  }
  std::vector<SthSpec> sth_kept(yes.begin(), yes.begin() + static_cast<std::ptrdiff_t>(balanced));
  sth_kept.insert(sth_kept.end(), no.begin(), no.begin() + static_cast<std::ptrdiff_t>(balanced));

  std::vector<std::string> pool;
  for (const auto& c : clips) pool.push_back(c.action);
  const FallbackDistractorProvider provider(std::move(pool));

  const auto set = build_question_set(accepted, tsh_kept, sth_kept, clips, provider, cfg.seed);
  for (const auto& line : set.log) err << line << "\n";

  std::map<std::string, std::size_t> counts;
  for (const auto& q : set.items) ++counts[std::string(to_string(q.kind))];
  write_jsonl(or_default(args.out, store / "questions.jsonl"), stamp(set.items, cfg));

  out << "accepted pairs " << accepted.size() << "\n";
  for (const auto* kind : {"binary", "mcq", "sorting", "open_sth"}) {
    out << "  " << kind << std::string(10 - std::string(kind).size(), ' ') << counts[kind] << "\n";
  }
  out << "  total     " << set.items.size() << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- heal

struct HealArgs {
  std::string frames;
  std::string out;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
};

struct Frame {
  std::string id;
  FeatureGrid features;
  AttentionTensor attention;
  heal::GridExtents grid;
};

bool frame_less(const std::string& a, const std::string& b) {
  return std::make_pair(a.size(), a) < std::make_pair(b.size(), b);
}

int cmd_heal(const RunConfig& cfg, const HealArgs& args, std::ostream& out) {
  const fs::path frames_dir = args.frames;
  if (!fs::is_directory(frames_dir)) exit_with(kExitInput, "frames directory not found: " + args.frames);
  const fs::path out_dir = or_default(args.out, frames_dir);
  if (!fs::is_directory(out_dir)) exit_with(kExitInput, "output directory not found: " + out_dir.string());
  if ((args.grid_h == 0) != (args.grid_w == 0)) {
    exit_with(kExitInput, "--grid-h and --grid-w must be given together");
  }

  std::vector<std::string> ids;
  constexpr std::string_view kAttnSuffix = ".attn.vhtn";
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > kAttnSuffix.size() && name.ends_with(kAttnSuffix)) {
      ids.push_back(name.substr(0, name.size() - kAttnSuffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end(), frame_less);
  if (ids.empty()) exit_with(kExitInput, "no *.attn.vhtn frames in " + args.frames);

  // Load and check every frame before writing anything.
  std::vector<Frame> frames;
  for (const auto& id : ids) {
    try {
      const auto feat_path = frames_dir / (id + ".feat.vhtn");
      if (!fs::is_regular_file(feat_path)) {
        exit_with(kExitInput, "frame " + id + ": missing " + feat_path.filename().string());
      }
      auto attention = AttentionTensor::from_tensor(read_tensor(frames_dir / (id + ".attn.vhtn")));
      auto features = FeatureGrid::from_tensor(read_tensor(feat_path));
      heal::GridExtents grid;
      const auto grid_path = frames_dir / (id + ".grid.json");
      if (fs::exists(grid_path)) {
        const auto j = Json::parse(read_text(grid_path));
        grid = {j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>()};
      } else if (args.grid_h) {
        grid = {args.grid_h, args.grid_w};
      } else {
        grid = heal::infer_grid(attention.seq_len() - 1);
      }
      if (grid.height * grid.width != attention.seq_len() - 1) {
        fail(ErrorCode::kShape, "patch grid " + std::to_string(grid.height) + "x" +
                                    std::to_string(grid.width) + " does not cover " +
                                    std::to_string(attention.seq_len() - 1) + " spatial tokens");
      }
      const auto violations = validate_attention(attention);
      if (!violations.empty()) {
        fail(ErrorCode::kValidation, "attention " + violations.front().describe());
      }
      frames.push_back({id, std::move(features), std::move(attention), grid});
    } catch (const Error& e) {
      exit_with(exit_code_for(e.code()), "frame " + id + ": " + e.what());
    } catch (const Json::exception& e) {
      exit_with(kExitInput, "frame " + id + ": bad grid sidecar: " + e.what());
    }
  }

  std::vector<std::pair<FeatureGrid, Json>> results;
  for (const auto& f : frames) {
    heal::HealTrace trace;
    auto healed = heal::heal(f.features, f.attention, f.grid, cfg.heal, &trace);
    Json sidecar = {
        {"frame", f.id},
        {"seed", cfg.seed},
        {"config_hash", cfg.config_hash()},
        {"config",
         {{"saliency_mode", heal::to_string(cfg.heal.saliency_mode)},
          {"interp", heal::to_string(cfg.heal.interp)}}},
        {"patch_grid", {{"height", f.grid.height}, {"width", f.grid.width}}},
        {"feature_grid",
         {{"height", f.features.height()},
          {"width", f.features.width()},
          {"channels", f.features.channels()}}},
        {"checksums",
         {{"saliency", to_hex(fnv1a64(std::span<const double>(trace.saliency)))},
          {"upsampled", to_hex(fnv1a64(std::span<const double>(trace.upsampled.values)))},
          {"normalized", to_hex(fnv1a64(std::span<const double>(trace.normalized)))},
          {"output", to_hex(fnv1a64(healed.values()))}}}};
    results.emplace_back(std::move(healed), std::move(sidecar));
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto base = out_dir / (frames[i].id + ".healed");
    auto tmp = base;
    tmp += ".vhtn.tmp";
    write_tensor(tmp, results[i].first.to_tensor());
    fs::rename(tmp, fs::path(base.string() + ".vhtn"));
    write_text_atomic(base.string() + ".json", results[i].second.dump(2) + "\n");
  }
  out << "healed " << frames.size() << " frames (" << heal::to_string(cfg.heal.saliency_mode)
      << ", " << heal::to_string(cfg.heal.interp) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string questions;
  std::string responses;
  std::string desc_cache;
  std::string out;
  std::string sentences_out;
};

int cmd_score(const RunConfig& cfg, const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  const fs::path store = cfg.store_root;
  const auto manifest =
      load_records<QAItem>(or_default(args.questions, store / "questions.jsonl"), "question manifest");
  const auto responses = load_records<ModelResponse>(
      or_default(args.responses, store / "responses.jsonl"), "response file");

  if (!args.sentences_out.empty()) {
    // Every scene string the description score will embed, for cache builders.
    std::set<std::string> sentences;
    std::map<std::string, const QAItem*> by_id;
    for (const auto& q : manifest) by_id[q.qa_id] = &q;
    for (const auto& q : manifest) {
      if (q.kind == QuestionKind::kOpenSth && q.answer == "Yes") {
        sentences.insert(q.scene_from);
        sentences.insert(q.scene_to);
      }
    }
    for (const auto& r : responses) {
      auto it = by_id.find(r.qa_id);
      if (it == by_id.end() || it->second->kind != QuestionKind::kOpenSth) continue;
      const auto parsed = parse_sth(r.raw_text);
      if (!parsed.scene_from.empty()) sentences.insert(parsed.scene_from);
      if (!parsed.scene_to.empty()) sentences.insert(parsed.scene_to);
    }
    std::string text;
    for (const auto& s : sentences) text += s + "\n";
    write_text_atomic(args.sentences_out, text);
  }

  std::unique_ptr<EmbeddingProvider> provider;
  if (args.desc_cache.empty()) {
    err << "note: no --desc-cache; description scores use the lexical trigram provider\n";
    provider = std::make_unique<HashedTrigramProvider>();
  } else {
    require_file(args.desc_cache, "description cache index");
    provider = std::make_unique<CacheEmbeddingProvider>(CacheEmbeddingProvider::load(args.desc_cache));
  }

  const auto report = score_run(manifest, responses, *provider, cfg.desc);
  Json j = report_to_json(report);
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.config_hash();
  write_text_atomic(or_default(args.out, store / "report.json"), j.dump(2) + "\n");
  if (report.provider_failures > 0) {
    err << "warning: " << report.provider_failures
        << " scene descriptions had no embedding and scored 0\n";
  }
  out << render_table(report);
  return kExitOk;
}

}  // namespace

Json RunConfig::to_json() const {
  return Json{{"seed", seed},
              {"scan_mode", halluc::to_string(scan_mode)},
              {"miner",
               {{"lambda_sem", miner.lambda_sem},
                {"lambda_vis", miner.lambda_vis},
                {"min_duration_s", miner.min_duration_s}}},
              {"desc", {{"thr_low", desc.thr_low}, {"alpha", desc.alpha}}},
              {"heal",
               {{"saliency_mode", heal::to_string(heal.saliency_mode)},
                {"interp", heal::to_string(heal.interp)}}}};
}

std::string RunConfig::config_hash() const { return to_hex(fnv1a64(to_json().dump())); }

std::string_view to_string(ReviewReason reason) {
  switch (reason) {
    case ReviewReason::kNoClearAction: return "no_clear_action";
    case ReviewReason::kMultipleActions: return "multiple_actions";
    case ReviewReason::kIdenticalActions: return "identical_actions";
    case ReviewReason::kOther: return "other";
  }
  return "other";
}

ReviewReason parse_review_reason(std::string_view name) {
  for (auto r : kReasonMenu) {
    if (to_string(r) == name) return r;
  }
  fail(ErrorCode::kFormat, "unknown review reason: " + std::string(name));
}

std::vector<ReviewVerdict> read_verdicts(const fs::path& path) {
  std::map<std::string, ReviewVerdict> latest;
  std::vector<std::string> order;
  try {
    for (const auto& rec : read_jsonl(path)) {
      ReviewVerdict v;
      rec.at("pair_id").get_to(v.pair_id);
      const auto verdict = rec.at("verdict").get<std::string>();
      if (verdict != "accept" && verdict != "reject") {
        fail(ErrorCode::kFormat, "verdict must be accept or reject, got " + verdict);
      }
      v.accept = verdict == "accept";
      if (!v.accept) v.reason = parse_review_reason(rec.at("reason").get<std::string>());
      v.note = rec.value("note", std::string{});
      if (!latest.count(v.pair_id)) order.push_back(v.pair_id);
      latest[v.pair_id] = std::move(v);
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  std::vector<ReviewVerdict> out;
  for (const auto& id : order) out.push_back(latest[id]);
  return out;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Video hallucination benchmark toolkit: mine pairs, review, generate "
               "questions, reweight features, score responses"};
  app.name("halluc");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string scan_mode = "within_video";
  std::string saliency_mode = "cls_row";
  std::string interp = "bilinear";
  app.add_option("--store", cfg.store_root, "Data store root")->envname("HALLUC_STORE");
  app.add_option("--seed", cfg.seed, "Seed recorded in every output")->capture_default_str();
  app.add_option("--lambda-sem", cfg.miner.lambda_sem, "Semantic similarity floor (>=)")
      ->capture_default_str();
  app.add_option("--lambda-vis", cfg.miner.lambda_vis, "Visual similarity ceiling (<)")
      ->capture_default_str();
  app.add_option("--min-duration", cfg.miner.min_duration_s, "Minimum clip length in seconds")
      ->capture_default_str();
  app.add_option("--thr-low", cfg.desc.thr_low, "Similarity where description credit starts")
      ->capture_default_str();
  app.add_option("--alpha", cfg.desc.alpha, "Weight of the classification score")
      ->capture_default_str();
  app.add_option("--saliency-mode", saliency_mode, "cls_row | query_sum")
      ->check(CLI::IsMember({"cls_row", "query_sum"}))
      ->capture_default_str();
  app.add_option("--interp", interp, "bilinear | nearest")
      ->check(CLI::IsMember({"bilinear", "nearest"}))
      ->capture_default_str();
  app.add_option("--scan-mode", scan_mode, "within_video | cross_video")
      ->check(CLI::IsMember({"within_video", "cross_video"}))
      ->capture_default_str();

  MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "Mine candidate pairs and assemble TSH/STH sets");
  mine->add_option("--clips", mine_args.clips, "Clip manifest (default <store>/clips.jsonl)");
  mine->add_option("--sem-encoder", mine_args.sem_encoder, "Semantic encoder directory name")
      ->capture_default_str();
  mine->add_option("--vis-encoder", mine_args.vis_encoder, "Visual encoder directory name")
      ->capture_default_str();
  mine->add_option("--out", mine_args.out_dir, "Output directory (default <store>)");

  ReviewArgs review_args;
  auto* review = app.add_subcommand("review", "Accept or reject mined pairs");
  review->add_option("--pairs", review_args.pairs, "Pair manifest");
  review->add_option("--clips", review_args.clips, "Clip manifest shown during review");
  review->add_option("--verdicts", review_args.verdicts, "Verdict file (read and updated)");
  review->add_option("--batch", review_args.batch, "Merge verdicts from this file instead of prompting");

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "Render the question manifest");
  generate->add_option("--pairs", gen_args.pairs, "Pair manifest");
  generate->add_option("--tsh", gen_args.tsh, "TSH manifest");
  generate->add_option("--sth", gen_args.sth, "STH manifest");
  generate->add_option("--verdicts", gen_args.verdicts, "Review verdicts");
  generate->add_option("--clips", gen_args.clips, "Clip manifest");
  generate->add_option("--out", gen_args.out, "Output (default <store>/questions.jsonl)");

  HealArgs heal_args;
  auto* heal_cmd = app.add_subcommand("heal", "Reweight per-frame features by attention saliency");
  heal_cmd->add_option("--frames", heal_args.frames, "Directory of <id>.attn.vhtn / <id>.feat.vhtn")
      ->required();
  heal_cmd->add_option("--out", heal_args.out, "Output directory (default: frames directory)");
  heal_cmd->add_option("--grid-h", heal_args.grid_h, "Patch grid height");
  heal_cmd->add_option("--grid-w", heal_args.grid_w, "Patch grid width");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score model responses");
  score->add_option("--questions", score_args.questions, "Question manifest");
  score->add_option("--responses", score_args.responses, "Responses JSONL {qa_id, raw_text}");
  score->add_option("--desc-cache", score_args.desc_cache, "Sentence embedding cache index (JSON)");
  score->add_option("--out", score_args.out, "Report path (default <store>/report.json)");
  score->add_option("--sentences-out", score_args.sentences_out,
                    "Also write the scene strings that need embeddings");

  app.fallthrough();

  std::vector<std::string> argv_storage = {"halluc"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    cfg.scan_mode = parse_scan_mode(scan_mode);
    cfg.heal.saliency_mode = heal::parse_saliency_mode(saliency_mode);
    cfg.heal.interp = heal::parse_interp(interp);
    cfg.miner.validate();
    cfg.desc.validate();

    if (mine->parsed()) return cmd_mine(cfg, mine_args, out, err);
    if (review->parsed()) return cmd_review(cfg, review_args, in, out, err);
    if (generate->parsed()) return cmd_generate(cfg, gen_args, out, err);
    if (heal_cmd->parsed()) return cmd_heal(cfg, heal_args, out);
    if (score->parsed()) return cmd_score(cfg, score_args, out, err);
  } catch (const ExitWith& e) {
    err << "error: " << e.message << "\n";
    return e.code;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace halluc::cli
