#include "halluc/dino_heal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "halluc/error.hpp"
#include "halluc/metrics.hpp"

namespace halluc::heal {
namespace {

struct AxisTap {
  std::size_t lo;
  std::size_t hi;
  double weight;  // of hi
};

double source_coordinate(std::size_t dst_index, std::size_t src, std::size_t dst) {
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double coord = (static_cast<double>(dst_index) + 0.5) * scale - 0.5;
  return std::clamp(coord, 0.0, static_cast<double>(src - 1));
}

std::vector<AxisTap> axis_taps(std::size_t src, std::size_t dst, Interp interp) {
  std::vector<AxisTap> taps(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    const double coord = source_coordinate(i, src, dst);
    if (interp == Interp::kNearest) {
      const auto idx = std::min(static_cast<std::size_t>(std::lround(coord)), src - 1);
      taps[i] = {idx, idx, 0.0};
    } else {
      const auto lo = static_cast<std::size_t>(std::floor(coord));
      taps[i] = {lo, std::min(lo + 1, src - 1), coord - static_cast<double>(lo)};
    }
  }
  return taps;
}

template <class Fn>
auto run_stage(std::string_view stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "heal stage " + std::string(stage) + ": " + e.what());
  }
}

}  // namespace

SaliencyMode parse_saliency_mode(std::string_view name) {
  if (name == "cls_row") return SaliencyMode::kClsRow;
  if (name == "query_sum") return SaliencyMode::kQuerySum;
  fail(ErrorCode::kInput, "unknown saliency mode: " + std::string(name));
}

Interp parse_interp(std::string_view name) {
  if (name == "bilinear") return Interp::kBilinear;
  if (name == "nearest") return Interp::kNearest;
  fail(ErrorCode::kInput, "unknown interpolation: " + std::string(name));
}

std::string_view to_string(SaliencyMode mode) {
  return mode == SaliencyMode::kClsRow ? "cls_row" : "query_sum";
}

std::string_view to_string(Interp interp) {
  return interp == Interp::kBilinear ? "bilinear" : "nearest";
}

GridExtents infer_grid(std::size_t spatial_tokens) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spatial_tokens))));
  while (side * side > spatial_tokens) --side;
  while ((side + 1) * (side + 1) <= spatial_tokens) ++side;
  if (side == 0 || side * side != spatial_tokens) {
    fail(ErrorCode::kShape, std::to_string(spatial_tokens) +
                                " spatial tokens do not form a square grid; "
                                "supply the patch grid extents");
  }
  return {side, side};
}

Matrix head_average(const AttentionTensor& attention) {
  const std::size_t L = attention.seq_len();
  const std::size_t H = attention.heads();
  const auto src = attention.values();
  Matrix out{L, std::vector<double>(L * L, 0.0)};
  const auto cells = static_cast<std::ptrdiff_t>(L * L);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cell = 0; cell < cells; ++cell) {
    double sum = 0.0;
    for (std::size_t h = 0; h < H; ++h) sum += src[h * L * L + static_cast<std::size_t>(cell)];
    out.values[static_cast<std::size_t>(cell)] = sum / static_cast<double>(H);
  }
  return out;
}

SaliencyVector extract_saliency(const Matrix& m, SaliencyMode mode) {
  if (m.size < 2) fail(ErrorCode::kShape, "saliency needs L >= 2");
  const std::size_t L = m.size;
  SaliencyVector out(L - 1);
  if (mode == SaliencyMode::kClsRow) {
    std::copy(m.values.begin() + 1, m.values.begin() + static_cast<std::ptrdiff_t>(L),
              out.begin());
    return out;
  }
  const auto spatial = static_cast<std::ptrdiff_t>(L - 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < spatial; ++j) {
    double sum = 0.0;
    for (std::size_t q = 0; q < L; ++q) sum += m.at(q, static_cast<std::size_t>(j) + 1);
    out[static_cast<std::size_t>(j)] = sum;
  }
  return out;
}

SaliencyGrid to_grid(const SaliencyVector& saliency, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || height * width != saliency.size()) {
    fail(ErrorCode::kShape, "cannot reshape " + std::to_string(saliency.size()) +
                                " saliency values to " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
  return {height, width, saliency};
}

SaliencyVector to_vector(const SaliencyGrid& grid) { return grid.values; }

SaliencyGrid upsample(const SaliencyGrid& grid, std::size_t height, std::size_t width,
                      Interp interp) {
  if (height == 0 || width == 0) fail(ErrorCode::kShape, "upsample target must be >= 1x1");
  if (grid.height == 0 || grid.width == 0) fail(ErrorCode::kShape, "empty saliency grid");
  const auto rows = axis_taps(grid.height, height, interp);
  const auto cols = axis_taps(grid.width, width, interp);
  SaliencyGrid out{height, width, std::vector<double>(height * width)};
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y) {
    const auto& r = rows[static_cast<std::size_t>(y)];
    double* dst = out.values.data() + static_cast<std::size_t>(y) * width;
    for (std::size_t x = 0; x < width; ++x) {
      const auto& c = cols[x];
      if (interp == Interp::kNearest) {
        dst[x] = grid.at(r.lo, c.lo);
        continue;
      }
      const double top = (1.0 - c.weight) * grid.at(r.lo, c.lo) + c.weight * grid.at(r.lo, c.hi);
      const double bottom =
          (1.0 - c.weight) * grid.at(r.hi, c.lo) + c.weight * grid.at(r.hi, c.hi);
      dst[x] = (1.0 - r.weight) * top + r.weight * bottom;
    }
  }
  return out;
}

std::vector<double> normalize(const SaliencyGrid& grid) {
  std::vector<double> out(grid.values.size());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = sigmoid(grid.values[static_cast<std::size_t>(i)]);
  }
  return out;
}

FeatureGrid reweight(const FeatureGrid& features, std::span<const double> weights) {
  if (weights.size() != features.positions()) {
    fail(ErrorCode::kShape, "saliency length " + std::to_string(weights.size()) +
                                " != feature positions " +
                                std::to_string(features.positions()));
  }
  FeatureGrid out = features;
  auto dst = out.mutable_values();
  const auto src = features.values();
  const std::size_t C = features.channels();
  const auto positions = static_cast<std::ptrdiff_t>(features.positions());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < positions; ++p) {
    const auto base = static_cast<std::size_t>(p) * C;
    const double w = weights[static_cast<std::size_t>(p)];
    for (std::size_t c = 0; c < C; ++c) {
      dst[base + c] = static_cast<float>(static_cast<double>(src[base + c]) * w);
    }
  }
  return out;
}

FeatureGrid heal(const FeatureGrid& features, const AttentionTensor& attention,
                 std::optional<GridExtents> patch_grid, const HealConfig& cfg,
                 HealTrace* trace) {
  run_stage("validate", [&] {
    const auto violations = validate_attention(attention);
    if (!violations.empty()) {
      fail(ErrorCode::kValidation, std::to_string(violations.size()) +
                                       " attention rows invalid, first: " +
                                       violations.front().describe());
    }
    return 0;
  });
  const auto extents =
      run_stage("grid", [&] { return patch_grid ? *patch_grid : infer_grid(attention.seq_len() - 1); });
  const auto averaged = run_stage("head_average", [&] { return head_average(attention); });
  auto saliency =
      run_stage("extract_saliency", [&] { return extract_saliency(averaged, cfg.saliency_mode); });
  auto grid = run_stage("to_grid", [&] { return to_grid(saliency, extents.height, extents.width); });
  auto upsampled = run_stage("upsample", [&] {
    return upsample(grid, features.height(), features.width(), cfg.interp);
  });
  auto normalized = run_stage("normalize", [&] { return normalize(upsampled); });
  auto out = run_stage("reweight", [&] { return reweight(features, normalized); });
  if (trace) {
    *trace = HealTrace{extents, std::move(saliency), std::move(grid), std::move(upsampled),
                       std::move(normalized)};
  }
  return out;
}

}  // namespace halluc::heal
