#include "halluc/pair_miner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "halluc/error.hpp"
#include "halluc/util.hpp"

namespace halluc {
namespace {

struct ResolvedClip {
  const ClipRecord* clip;
  const Embedding* sem;
  const Embedding* vis;
};

std::vector<ResolvedClip> resolve(const std::vector<ClipRecord>& clips,
                                  const EmbeddingIndex& sem,
                                  const EmbeddingIndex& vis) {
  std::vector<ResolvedClip> out;
  out.reserve(clips.size());
  std::set<std::string_view> seen;
  for (const auto& c : clips) {
    if (!seen.insert(c.clip_id).second) {
      fail(ErrorCode::kInput, "duplicate clip_id: " + c.clip_id);
    }
    auto s = sem.find(c.clip_id);
    if (s == sem.end()) {
      fail(ErrorCode::kMissingData, "missing semantic embedding for clip " + c.clip_id);
    }
    auto v = vis.find(c.clip_id);
    if (v == vis.end()) {
      fail(ErrorCode::kMissingData, "missing visual embedding for clip " + c.clip_id);
    }
    out.push_back({&c, &s->second, &v->second});
  }
  return out;
}

bool scenes_distinct(const ClipRecord& a, const ClipRecord& b) {
  if (a.scene.empty() || b.scene.empty()) return false;
  return normalize_label(a.scene) != normalize_label(b.scene);
}

bool is_adjacent(const ClipRecord& a, const ClipRecord& b) {
  return a.source_video_id == b.source_video_id &&
         (a.order_index - b.order_index == 1 || b.order_index - a.order_index == 1);
}

bool in_scope(const ClipRecord& a, const ClipRecord& b, ScanMode mode) {
  return mode == ScanMode::kCrossVideo || a.source_video_id == b.source_video_id;
}

// Evaluates one unordered pair; returns true and fills `out` when it passes.
bool evaluate(const ResolvedClip& a, const ResolvedClip& b, const MinerConfig& cfg,
              CandidatePair& out) {
  const double sem = cosine(*a.sem, *b.sem);
  if (!(sem >= cfg.lambda_sem)) return false;
  const double vis = cosine(*a.vis, *b.vis);
  if (!(vis < cfg.lambda_vis)) return false;
  const bool a_first = a.clip->clip_id < b.clip->clip_id;
  out.clip_a = a_first ? a.clip->clip_id : b.clip->clip_id;
  out.clip_b = a_first ? b.clip->clip_id : a.clip->clip_id;
  out.sem_sim = sem;
  out.vis_sim = vis;
  out.adjacent = is_adjacent(*a.clip, *b.clip);
  out.distinct_scene = scenes_distinct(*a.clip, *b.clip);
  return true;
}

void sort_pairs(std::vector<CandidatePair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    return std::tie(x.clip_a, x.clip_b) < std::tie(y.clip_a, y.clip_b);
  });
}

std::unordered_map<std::string_view, const ClipRecord*> index_clips(
    const std::vector<ClipRecord>& clips) {
  std::unordered_map<std::string_view, const ClipRecord*> by_id;
  for (const auto& c : clips) by_id.emplace(c.clip_id, &c);
  return by_id;
}

const ClipRecord& lookup(
    const std::unordered_map<std::string_view, const ClipRecord*>& by_id,
    const std::string& id) {
  auto it = by_id.find(id);
  if (it == by_id.end()) fail(ErrorCode::kMissingData, "unknown clip " + id);
  return *it->second;
}

}  // namespace

void MinerConfig::validate() const {
  auto in_range = [](double l) { return l > -1.0 && l <= 1.0; };
  if (!in_range(lambda_sem) || !in_range(lambda_vis)) {
    fail(ErrorCode::kInput, "similarity thresholds must lie in (-1, 1]");
  }
  if (!(min_duration_s >= 0.0)) fail(ErrorCode::kInput, "min_duration_s must be >= 0");
}

ScanMode parse_scan_mode(std::string_view name) {
  if (name == "within_video") return ScanMode::kWithinVideo;
  if (name == "cross_video") return ScanMode::kCrossVideo;
  fail(ErrorCode::kInput, "unknown scan mode: " + std::string(name));
}

std::string_view to_string(ScanMode mode) {
  return mode == ScanMode::kWithinVideo ? "within_video" : "cross_video";
}

Embedding pool_video(const EmbeddingMatrix& frames) {
  Embedding mean(frames.dim(), 0.0);
  for (std::size_t t = 0; t < frames.frames(); ++t) {
    auto row = frames.row(t);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
  }
  double norm2 = 0.0;
  for (auto& v : mean) {
    v /= static_cast<double>(frames.frames());
    norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  if (!(norm > 1e-12)) {
    fail(ErrorCode::kDegenerateEmbedding, "pooled embedding is numerically zero");
  }
  for (auto& v : mean) v /= norm;
  return mean;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::kShape, "cosine: dimension mismatch " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (!(uu > 0.0) || !(vv > 0.0)) {
    fail(ErrorCode::kDegenerateEmbedding, "cosine of a zero vector");
  }
  // sqrt(uu * vv) keeps the expression symmetric and gives exactly 1 for u == v.
  return std::clamp(dot / std::sqrt(uu * vv), -1.0, 1.0);
}

std::vector<ClipRecord> filter_short_clips(const std::vector<ClipRecord>& clips,
                                           double min_duration_s) {
  std::vector<ClipRecord> kept;
  for (const auto& c : clips) {
    if (!(c.end_s > c.start_s)) {
      fail(ErrorCode::kInput, "clip " + c.clip_id + " has end_s <= start_s");
    }
    if (c.duration() >= min_duration_s) kept.push_back(c);
  }
  return kept;
}

std::vector<CandidatePair> mine_pairs(const std::vector<ClipRecord>& clips,
                                      const EmbeddingIndex& sem,
                                      const EmbeddingIndex& vis,
                                      const MinerConfig& cfg, ScanMode mode) {
  cfg.validate();
  const auto resolved = resolve(clips, sem, vis);
  const auto n = static_cast<std::ptrdiff_t>(resolved.size());
  std::vector<CandidatePair> pairs;

#pragma omp parallel
  {
    std::vector<CandidatePair> local;
#pragma omp for schedule(dynamic, 8) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t j = i + 1; j < n; ++j) {
        const auto& a = resolved[static_cast<std::size_t>(i)];
        const auto& b = resolved[static_cast<std::size_t>(j)];
        if (!in_scope(*a.clip, *b.clip, mode)) continue;
        CandidatePair p;
        if (evaluate(a, b, cfg, p)) local.push_back(std::move(p));
      }
    }
#pragma omp critical(halluc_mine_merge)
    pairs.insert(pairs.end(), std::make_move_iterator(local.begin()),
                 std::make_move_iterator(local.end()));
  }
  sort_pairs(pairs);
  return pairs;
}

namespace serial {

std::vector<CandidatePair> mine_pairs(const std::vector<ClipRecord>& clips,
                                      const EmbeddingIndex& sem,
                                      const EmbeddingIndex& vis,
                                      const MinerConfig& cfg, ScanMode mode) {
  cfg.validate();
  const auto resolved = resolve(clips, sem, vis);
  std::vector<CandidatePair> pairs;
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    for (std::size_t j = i + 1; j < resolved.size(); ++j) {
      if (!in_scope(*resolved[i].clip, *resolved[j].clip, mode)) continue;
      CandidatePair p;
      if (evaluate(resolved[i], resolved[j], cfg, p)) pairs.push_back(std::move(p));
    }
  }
  sort_pairs(pairs);
  return pairs;
}

}  // namespace serial

std::vector<CandidatePair> filter_identical_actions(
    const std::vector<CandidatePair>& pairs, const std::vector<ClipRecord>& clips) {
  const auto by_id = index_clips(clips);
  std::vector<CandidatePair> kept;
  for (const auto& p : pairs) {
    const auto& a = lookup(by_id, p.clip_a);
    const auto& b = lookup(by_id, p.clip_b);
    if (normalize_label(a.action) != normalize_label(b.action)) kept.push_back(p);
  }
  return kept;
}

std::vector<TshEntry> assemble_tsh(const std::vector<CandidatePair>& pairs,
                                   const std::vector<ClipRecord>& clips) {
  const auto by_id = index_clips(clips);
  std::vector<TshEntry> out;
  for (const auto& p : pairs) {
    if (!p.adjacent) continue;
    const auto& a = lookup(by_id, p.clip_a);
    const auto& b = lookup(by_id, p.clip_b);
    if (!is_adjacent(a, b)) continue;
    const bool a_first = a.order_index < b.order_index;
    out.push_back({p, a.source_video_id, a_first ? a.clip_id : b.clip_id,
                   a_first ? b.clip_id : a.clip_id});
  }
  return out;
}

namespace {

SthSpec make_spec(std::vector<std::string> ids, bool change, std::string from,
                  std::string to, std::string pair_id, std::size_t ordinal) {
  std::string key;
  for (const auto& id : ids) key += id + ">";
  SthSpec s;
  s.spec_id = "sth-" + to_hex(hash_fields({key, change ? "yes" : "no", pair_id,
                                           std::to_string(ordinal)}));
  s.clip_ids = std::move(ids);
  s.change = change;
  s.scene_from = std::move(from);
  s.scene_to = std::move(to);
  s.pair_id = std::move(pair_id);
  return s;
}

}  // namespace

SthAssembly assemble_sth(const std::vector<CandidatePair>& pairs,
                         const std::vector<ClipRecord>& clips, std::uint64_t seed) {
  const auto by_id = index_clips(clips);
  SthAssembly out;
  std::vector<const CandidatePair*> same_scene;
  std::set<std::string> participants;

  for (const auto& p : pairs) {
    const auto& a = lookup(by_id, p.clip_a);
    const auto& b = lookup(by_id, p.clip_b);
    if (p.distinct_scene) {
      if (a.scene.empty() || b.scene.empty()) {
        fail(ErrorCode::kMissingData, "pair " + p.pair_id() + " lacks scene labels");
      }
      out.specs.push_back(make_spec({a.clip_id, b.clip_id}, true, a.scene, b.scene,
                                    p.pair_id(), 0));
      out.specs.push_back(make_spec({b.clip_id, a.clip_id}, true, b.scene, a.scene,
                                    p.pair_id(), 0));
      participants.insert(a.clip_id);
      participants.insert(b.clip_id);
    } else if (!a.scene.empty() && !b.scene.empty()) {
      same_scene.push_back(&p);
    }
  }

  const std::size_t needed = out.specs.size();
  if (needed == 0) {
    out.warnings.push_back("no distinct-scene pairs; scene-transition set is empty");
    return out;
  }

  Rng rng(derive_seed(seed, "sth-negatives"));
  rng.shuffle(same_scene);
  std::size_t added = 0;
  for (const auto* p : same_scene) {
    if (added == needed) break;
    const auto& a = lookup(by_id, p->clip_a);
    out.specs.push_back(make_spec({p->clip_a, p->clip_b}, false, a.scene, a.scene,
                                  p->pair_id(), 0));
    ++added;
  }

  if (added < needed) {
    std::vector<std::string> pool(participants.begin(), participants.end());
    rng.shuffle(pool);
    out.warnings.push_back("only " + std::to_string(added) +
                           " equal-scene pairs; filling " +
                           std::to_string(needed - added) +
                           " no-change specs with single clips");
    for (std::size_t k = 0; added < needed; ++k, ++added) {
      const auto& clip = lookup(by_id, pool[k % pool.size()]);
      out.specs.push_back(make_spec({clip.clip_id}, false, clip.scene, clip.scene, "",
                                    k / pool.size()));
    }
  }
  std::sort(out.specs.begin(), out.specs.end(),
            [](const auto& x, const auto& y) { return x.spec_id < y.spec_id; });
  return out;
}

void to_json(Json& j, const ClipRecord& c) {
  j = Json{{"clip_id", c.clip_id},       {"source_video_id", c.source_video_id},
           {"start_s", c.start_s},       {"end_s", c.end_s},
           {"action", c.action},         {"scene", c.scene},
           {"caption", c.caption},       {"order_index", c.order_index}};
}

void from_json(const Json& j, ClipRecord& c) {
  j.at("clip_id").get_to(c.clip_id);
  c.source_video_id = j.value("source_video_id", c.clip_id);
  j.at("start_s").get_to(c.start_s);
  j.at("end_s").get_to(c.end_s);
  c.action = j.value("action", std::string{});
  c.scene = j.value("scene", std::string{});
  c.caption = j.value("caption", std::string{});
  c.order_index = j.value("order_index", std::int64_t{0});
}

void to_json(Json& j, const CandidatePair& p) {
  j = Json{{"pair_id", p.pair_id()}, {"clip_a", p.clip_a},
           {"clip_b", p.clip_b},     {"sem_sim", p.sem_sim},
           {"vis_sim", p.vis_sim},   {"adjacent", p.adjacent},
           {"distinct_scene", p.distinct_scene}};
}

void from_json(const Json& j, CandidatePair& p) {
  j.at("clip_a").get_to(p.clip_a);
  j.at("clip_b").get_to(p.clip_b);
  j.at("sem_sim").get_to(p.sem_sim);
  j.at("vis_sim").get_to(p.vis_sim);
  j.at("adjacent").get_to(p.adjacent);
  j.at("distinct_scene").get_to(p.distinct_scene);
}

void to_json(Json& j, const TshEntry& t) {
  j = Json{{"pair_id", t.pair.pair_id()},
           {"pair", t.pair},
           {"source_video_id", t.source_video_id},
           {"sequence", t.sequence()}};
}

void from_json(const Json& j, TshEntry& t) {
  j.at("pair").get_to(t.pair);
  j.at("source_video_id").get_to(t.source_video_id);
  auto seq = j.at("sequence").get<std::vector<std::string>>();
  if (seq.size() != 2) fail(ErrorCode::kFormat, "tsh sequence must hold 2 clips");
  t.first_clip = seq[0];
  t.second_clip = seq[1];
}

void to_json(Json& j, const SthSpec& s) {
  j = Json{{"spec_id", s.spec_id},       {"clip_ids", s.clip_ids},
           {"change", s.change},         {"scene_from", s.scene_from},
           {"scene_to", s.scene_to},     {"pair_id", s.pair_id}};
  if (s.change) {
    j["ground_truth"] = "from " + s.scene_from + " to " + s.scene_to;
  }
}

void from_json(const Json& j, SthSpec& s) {
  j.at("spec_id").get_to(s.spec_id);
  j.at("clip_ids").get_to(s.clip_ids);
  j.at("change").get_to(s.change);
  s.scene_from = j.value("scene_from", std::string{});
  s.scene_to = j.value("scene_to", std::string{});
  s.pair_id = j.value("pair_id", std::string{});
}

}  // namespace halluc
