#pragma once
// Helpers shared by the unit and acceptance tests: temp directories, seeded
// generators and a small on-disk fixture corpus.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "halluc/cli.hpp"
#include "halluc/pair_miner.hpp"
#include "halluc/tensor_store.hpp"

namespace testsupport {
namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("halluc-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Test-side generator. Uses its own arithmetic rather than the library Rng so
// failures in one cannot mask the other.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool coin() { return (engine_() >> 63) != 0; }
  double normal() {
    // Box-Muller, so draws do not depend on the standard library.
    const double u1 = uniform(1e-12, 1.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Softmax rows built as exp / sum in double, then rounded to float.
inline halluc::AttentionTensor random_attention(Gen& g, std::size_t heads, std::size_t len,
                                                double spread = 2.0) {
  std::vector<float> values(heads * len * len);
  for (std::size_t r = 0; r < heads * len; ++r) {
    std::vector<double> e(len);
    double sum = 0.0;
    for (auto& x : e) {
      x = std::exp(spread * g.normal());
      sum += x;
    }
    for (std::size_t k = 0; k < len; ++k) values[r * len + k] = static_cast<float>(e[k] / sum);
  }
  return halluc::AttentionTensor(heads, len, std::move(values));
}

inline halluc::AttentionTensor uniform_attention(std::size_t heads, std::size_t len) {
  return halluc::AttentionTensor(
      heads, len, std::vector<float>(heads * len * len, 1.0f / static_cast<float>(len)));
}

inline halluc::FeatureGrid random_features(Gen& g, std::size_t h, std::size_t w, std::size_t c) {
  std::vector<float> v(h * w * c);
  for (auto& x : v) x = static_cast<float>(g.uniform(-3.0, 3.0));
  return halluc::FeatureGrid(h, w, c, std::move(v));
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = halluc::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

// ---------------------------------------------------------------- corpus
// Videos of consecutive clips. Each clip gets a semantic and a visual
// embedding built from cluster centres plus small noise, so similarities sit
// far from any threshold: same cluster ~0.99, different cluster ~0.

struct PlantedClip {
  halluc::ClipRecord record;
  std::size_t sem_cluster;
  std::size_t vis_cluster;
};

inline std::vector<double> unit_random(Gen& g, std::size_t dim) {
  std::vector<double> v(dim);
  double n = 0.0;
  for (auto& x : v) {
    x = g.normal();
    n += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

struct PlantedCorpus {
  std::vector<PlantedClip> clips;
  halluc::EmbeddingIndex sem;
  halluc::EmbeddingIndex vis;

  std::vector<halluc::ClipRecord> records() const {
    std::vector<halluc::ClipRecord> out;
    for (const auto& c : clips) out.push_back(c.record);
    return out;
  }
};

// Orthogonal-ish cluster centres in a high dimension keep cross-cluster
// cosines near 0.
inline PlantedCorpus planted_corpus(std::uint64_t seed, std::size_t videos,
                                    std::size_t clips_per_video, std::size_t sem_clusters,
                                    std::size_t vis_clusters, std::size_t dim = 64) {
  Gen g(seed);
  std::vector<std::vector<double>> sem_c, vis_c;
  for (std::size_t i = 0; i < sem_clusters; ++i) sem_c.push_back(unit_random(g, dim));
  for (std::size_t i = 0; i < vis_clusters; ++i) vis_c.push_back(unit_random(g, dim));
  static const char* kActions[] = {"skiing", "ironing wax on the ski", "gutting a fish",
                                   "starting a fire", "mixing the ingredients",
                                   "turning the steering wheel", "playing violin",
                                   "washing dishes", "riding a horse", "surfing"};
  static const char* kScenes[] = {"in a swimming pool", "in a bathtub", "in a kitchen",
                                  "on a beach", "in a forest"};
  PlantedCorpus corpus;
  for (std::size_t v = 0; v < videos; ++v) {
    for (std::size_t k = 0; k < clips_per_video; ++k) {
      PlantedClip pc;
      auto& r = pc.record;
      char id[48];
      std::snprintf(id, sizeof id, "v%03zu_c%02zu", v, k);
      r.clip_id = id;
      r.source_video_id = "v" + std::to_string(v);
      r.start_s = 10.0 * static_cast<double>(k);
      r.end_s = r.start_s + 2.0 + g.uniform(0.0, 5.0);
      r.order_index = static_cast<std::int64_t>(k);
      r.action = kActions[g.below(std::size(kActions))];
      r.scene = kScenes[g.below(std::size(kScenes))];
      r.caption = "a person " + r.action + " " + r.scene;
      pc.sem_cluster = g.below(sem_clusters);
      pc.vis_cluster = g.below(vis_clusters);
      auto jitter = [&](const std::vector<double>& centre) {
        halluc::Embedding e(centre);
        for (auto& x : e) x += 0.01 * g.normal();
        return e;
      };
      corpus.sem[r.clip_id] = jitter(sem_c[pc.sem_cluster]);
      corpus.vis[r.clip_id] = jitter(vis_c[pc.vis_cluster]);
      corpus.clips.push_back(std::move(pc));
    }
  }
  return corpus;
}

// Writes clips.jsonl and per-clip embedding tensors (several noisy frames
// per clip, so pooling has work to do) under `store`.
inline void write_store(const PlantedCorpus& corpus, const fs::path& store, Gen& g) {
  fs::create_directories(store / "semantic");
  fs::create_directories(store / "visual");
  std::vector<halluc::Json> lines;
  for (const auto& c : corpus.clips) lines.push_back(c.record);
  halluc::write_jsonl(store / "clips.jsonl", lines);
  auto dump = [&](const halluc::EmbeddingIndex& index, const fs::path& dir) {
    for (const auto& [id, e] : index) {
      const std::size_t frames = 3;
      halluc::Tensor t;
      t.dims = {static_cast<std::uint32_t>(frames), static_cast<std::uint32_t>(e.size())};
      for (std::size_t f = 0; f < frames; ++f) {
        for (double x : e) t.values.push_back(static_cast<float>(x + 0.002 * g.normal()));
      }
      halluc::write_tensor(dir / (id + ".vhtn"), t);
    }
  };
  dump(corpus.sem, store / "semantic");
  dump(corpus.vis, store / "visual");
}

}  // namespace testsupport
