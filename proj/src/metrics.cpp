#include "halluc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "halluc/error.hpp"
#include "halluc/manifest.hpp"
#include "halluc/util.hpp"

namespace halluc {

double accuracy(std::size_t n_correct, std::size_t n_total) {
  if (n_total == 0) fail(ErrorCode::kEmptyTask, "accuracy over zero questions");
  if (n_correct > n_total) fail(ErrorCode::kInput, "n_correct exceeds n_total");
  return static_cast<double>(n_correct) / static_cast<double>(n_total);
}

double mcc(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorCode::kEmptyTask, "MCC over an empty confusion matrix");
  const auto predicted_yes = static_cast<double>(c.n11 + c.n01);
  const auto actual_yes = static_cast<double>(c.n11 + c.n10);
  const auto actual_no = static_cast<double>(c.n00 + c.n01);
  const auto predicted_no = static_cast<double>(c.n00 + c.n10);
  if (predicted_yes == 0 || actual_yes == 0 || actual_no == 0 || predicted_no == 0) {
    return 0.0;
  }
  const double numerator = static_cast<double>(c.n11) * static_cast<double>(c.n00) -
                           static_cast<double>(c.n01) * static_cast<double>(c.n10);
  const double denominator =
      std::sqrt(predicted_yes * actual_yes) * std::sqrt(actual_no * predicted_no);
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

double score_cls(double mcc_value) {
  if (!(mcc_value >= -1.0 && mcc_value <= 1.0)) {
    fail(ErrorCode::kInput, "MCC outside [-1, 1]");
  }
  const double half = (mcc_value + 1.0) / 2.0;
  return half * half;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void DescConfig::validate() const {
  if (!(thr_low >= 0.0 && thr_low < 1.0)) fail(ErrorCode::kInput, "thr_low must be in [0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::kInput, "alpha must be in [0, 1]");
}

double desc_score_from_similarity(double similarity, double thr_low) {
  if (similarity <= thr_low) return 0.0;
  const double floor = sigmoid(thr_low);
  return (sigmoid(similarity) - floor) / (sigmoid(1.0) - floor);
}

CacheEmbeddingProvider::CacheEmbeddingProvider(
    std::map<std::string, Embedding, std::less<>> entries, std::string label)
    : entries_(std::move(entries)), label_(std::move(label)) {}

CacheEmbeddingProvider CacheEmbeddingProvider::load(const std::filesystem::path& index_path) {
  Json index;
  try {
    index = Json::parse(read_text(index_path));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kFormat, index_path.string() + ": " + e.what());
  }
  if (!index.is_object() || !index.contains("tensor") || !index.contains("sentences")) {
    fail(ErrorCode::kFormat, index_path.string() + ": needs \"tensor\" and \"sentences\"");
  }
  const auto sentences = index.at("sentences").get<std::vector<std::string>>();
  const auto tensor =
      read_tensor(index_path.parent_path() / index.at("tensor").get<std::string>());
  if (tensor.dims.size() != 2 || tensor.dims[0] != sentences.size()) {
    fail(ErrorCode::kFormat, index_path.string() + ": tensor must be N x D with N = " +
                                 std::to_string(sentences.size()));
  }
  const std::size_t dim = tensor.dims[1];
  std::map<std::string, Embedding, std::less<>> entries;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    Embedding v(tensor.values.begin() + static_cast<std::ptrdiff_t>(i * dim),
                tensor.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    if (!entries.emplace(sentences[i], std::move(v)).second) {
      fail(ErrorCode::kFormat, "duplicate sentence in cache: \"" + sentences[i] + "\"");
    }
  }
  std::string label = "cache:" + index_path.filename().string();
  if (index.contains("checkpoint")) label += "@" + index["checkpoint"].get<std::string>();
  return CacheEmbeddingProvider(std::move(entries), std::move(label));
}

Embedding CacheEmbeddingProvider::embed(std::string_view sentence) const {
  auto it = entries_.find(sentence);
  if (it == entries_.end()) {
    fail(ErrorCode::kProvider, "no cached embedding for \"" + std::string(sentence) + "\"");
  }
  return it->second;
}

Embedding HashedTrigramProvider::embed(std::string_view sentence) const {
  const std::string text = " " + normalize_label(sentence) + " ";
  Embedding v(kDim, 0.0);
  if (text.size() < 3) fail(ErrorCode::kProvider, "empty sentence");
  for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
    v[fnv1a64(std::string_view(text).substr(i, 3)) % kDim] += 1.0;
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  for (auto& x : v) x /= norm;
  return v;
}

double score_desc_one(std::string_view pred_scene, std::string_view true_scene,
                      const EmbeddingProvider& provider, const DescConfig& cfg) {
  if (true_scene.empty()) fail(ErrorCode::kInput, "ground-truth scene is empty");
  if (pred_scene.empty()) return 0.0;
  const auto pred = provider.embed(pred_scene);
  const auto truth = provider.embed(true_scene);
  double similarity = 0.0;
  try {
    similarity = cosine(pred, truth);
  } catch (const Error& e) {
    throw Error(ErrorCode::kProvider, std::string("provider returned unusable vector: ") +
                                          e.what());
  }
  return desc_score_from_similarity(similarity, cfg.thr_low);
}

double score_desc(std::string_view pred_from, std::string_view pred_to,
                  std::string_view truth_from, std::string_view truth_to,
                  const EmbeddingProvider& provider, const DescConfig& cfg) {
  return 0.5 * (score_desc_one(pred_from, truth_from, provider, cfg) +
                score_desc_one(pred_to, truth_to, provider, cfg));
}

double score_overall(double cls, double desc, double alpha) {
  return alpha * cls + (1.0 - alpha) * desc;
}

}  // namespace halluc
