#pragma once

// Saliency-guided feature reweighting for one frame:
//   head average -> [CLS] saliency -> reshape to the patch grid ->
//   upsample to the feature grid -> sigmoid -> scale every channel.
// The kernels in `halluc::heal` are OpenMP-parallel; `halluc::heal::serial`
// holds the straight-line reference versions used by tests and benchmarks.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "halluc/tensor_store.hpp"

namespace halluc::heal {

/// Dense row-major square matrix (the head-averaged L x L attention).
struct Matrix {
  std::size_t size = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * size + c]; }
};

using SaliencyVector = std::vector<double>;

struct SaliencyGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool operator==(const SaliencyGrid&) const = default;
};

enum class SaliencyMode {
  kClsRow,    // row 0 of the averaged map, keys 1..L-1
  kQuerySum,  // column sums over all queries, keys 1..L-1
};

enum class Interp { kBilinear, kNearest };

SaliencyMode parse_saliency_mode(std::string_view name);
Interp parse_interp(std::string_view name);
std::string_view to_string(SaliencyMode mode);
std::string_view to_string(Interp interp);

struct HealConfig {
  SaliencyMode saliency_mode = SaliencyMode::kClsRow;
  Interp interp = Interp::kBilinear;
};

struct GridExtents {
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Square patch grid for `spatial_tokens`; throws kShape if it is not a
/// perfect square.
GridExtents infer_grid(std::size_t spatial_tokens);

Matrix head_average(const AttentionTensor& attention);
SaliencyVector extract_saliency(const Matrix& averaged, SaliencyMode mode);
SaliencyGrid to_grid(const SaliencyVector& saliency, std::size_t height, std::size_t width);
SaliencyVector to_vector(const SaliencyGrid& grid);

/// Center-aligned resampling. Source coordinate for destination index i is
/// (i + 0.5) * src / dst - 0.5, clamped to [0, src - 1]; bilinear blends the
/// two neighbours per axis, nearest rounds the coordinate.
SaliencyGrid upsample(const SaliencyGrid& grid, std::size_t height, std::size_t width,
                      Interp interp);

/// Row-major flatten followed by the logistic sigmoid.
std::vector<double> normalize(const SaliencyGrid& grid);

/// Scales every channel at spatial position p by weights[p].
FeatureGrid reweight(const FeatureGrid& features, std::span<const double> weights);

/// Intermediate stage outputs, for sidecars and debugging.
struct HealTrace {
  GridExtents patch_grid;
  SaliencyVector saliency;
  SaliencyGrid grid;
  SaliencyGrid upsampled;
  std::vector<double> normalized;
};

/// Full transform. `patch_grid` defaults to the square inferred from L - 1.
/// Stage failures are rethrown with the stage name prefixed.
FeatureGrid heal(const FeatureGrid& features, const AttentionTensor& attention,
                 std::optional<GridExtents> patch_grid, const HealConfig& cfg,
                 HealTrace* trace = nullptr);

namespace serial {

Matrix head_average(const AttentionTensor& attention);
SaliencyVector extract_saliency(const Matrix& averaged, SaliencyMode mode);
SaliencyGrid upsample(const SaliencyGrid& grid, std::size_t height, std::size_t width,
                      Interp interp);
std::vector<double> normalize(const SaliencyGrid& grid);
FeatureGrid reweight(const FeatureGrid& features, std::span<const double> weights);
FeatureGrid heal(const FeatureGrid& features, const AttentionTensor& attention,
                 std::optional<GridExtents> patch_grid, const HealConfig& cfg);

}  // namespace serial
}  // namespace halluc::heal
