// Reference kernels: one loop nest per stage, no tables, no threading.

#include <algorithm>
#include <cmath>
#include <string>

#include "halluc/dino_heal.hpp"
#include "halluc/error.hpp"
#include "halluc/metrics.hpp"

namespace halluc::heal::serial {

Matrix head_average(const AttentionTensor& attention) {
  const std::size_t L = attention.seq_len();
  Matrix out{L, std::vector<double>(L * L, 0.0)};
  for (std::size_t q = 0; q < L; ++q) {
    for (std::size_t k = 0; k < L; ++k) {
      double sum = 0.0;
      for (std::size_t h = 0; h < attention.heads(); ++h) sum += attention.at(h, q, k);
      out.values[q * L + k] = sum / static_cast<double>(attention.heads());
    }
  }
  return out;
}

SaliencyVector extract_saliency(const Matrix& m, SaliencyMode mode) {
  if (m.size < 2) fail(ErrorCode::kShape, "saliency needs L >= 2");
  SaliencyVector out(m.size - 1, 0.0);
  for (std::size_t j = 1; j < m.size; ++j) {
    if (mode == SaliencyMode::kClsRow) {
      out[j - 1] = m.at(0, j);
    } else {
      double sum = 0.0;
      for (std::size_t q = 0; q < m.size; ++q) sum += m.at(q, j);
      out[j - 1] = sum;
    }
  }
  return out;
}

SaliencyGrid upsample(const SaliencyGrid& grid, std::size_t height, std::size_t width,
                      Interp interp) {
  if (height == 0 || width == 0) fail(ErrorCode::kShape, "upsample target must be >= 1x1");
  SaliencyGrid out{height, width, std::vector<double>(height * width)};
  const double sy = static_cast<double>(grid.height) / static_cast<double>(height);
  const double sx = static_cast<double>(grid.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double cy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(grid.height - 1));
    for (std::size_t x = 0; x < width; ++x) {
      const double cx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(grid.width - 1));
      double value;
      if (interp == Interp::kNearest) {
        const auto iy = std::min(static_cast<std::size_t>(std::lround(cy)), grid.height - 1);
        const auto ix = std::min(static_cast<std::size_t>(std::lround(cx)), grid.width - 1);
        value = grid.at(iy, ix);
      } else {
        const auto y0 = static_cast<std::size_t>(std::floor(cy));
        const auto x0 = static_cast<std::size_t>(std::floor(cx));
        const auto y1 = std::min(y0 + 1, grid.height - 1);
        const auto x1 = std::min(x0 + 1, grid.width - 1);
        const double wy = cy - static_cast<double>(y0);
        const double wx = cx - static_cast<double>(x0);
        const double top = (1.0 - wx) * grid.at(y0, x0) + wx * grid.at(y0, x1);
        const double bottom = (1.0 - wx) * grid.at(y1, x0) + wx * grid.at(y1, x1);
        value = (1.0 - wy) * top + wy * bottom;
      }
      out.values[y * width + x] = value;
    }
  }
  return out;
}

std::vector<double> normalize(const SaliencyGrid& grid) {
  std::vector<double> out;
  out.reserve(grid.values.size());
  for (double v : grid.values) out.push_back(sigmoid(v));
  return out;
}

FeatureGrid reweight(const FeatureGrid& features, std::span<const double> weights) {
  if (weights.size() != features.positions()) {
    fail(ErrorCode::kShape, "saliency length does not match feature positions");
  }
  std::vector<float> values(features.values().size());
  for (std::size_t y = 0; y < features.height(); ++y) {
    for (std::size_t x = 0; x < features.width(); ++x) {
      const std::size_t p = y * features.width() + x;
      for (std::size_t c = 0; c < features.channels(); ++c) {
        values[p * features.channels() + c] =
            static_cast<float>(static_cast<double>(features.at(y, x, c)) * weights[p]);
      }
    }
  }
  return FeatureGrid(features.height(), features.width(), features.channels(),
                     std::move(values));
}

FeatureGrid heal(const FeatureGrid& features, const AttentionTensor& attention,
                 std::optional<GridExtents> patch_grid, const HealConfig& cfg) {
  if (!validate_attention(attention).empty()) {
    fail(ErrorCode::kValidation, "heal stage validate: attention rows invalid");
  }
  const auto extents = patch_grid ? *patch_grid : infer_grid(attention.seq_len() - 1);
  const auto saliency = serial::extract_saliency(serial::head_average(attention), cfg.saliency_mode);
  const auto grid = heal::to_grid(saliency, extents.height, extents.width);
  const auto weights =
      serial::normalize(serial::upsample(grid, features.height(), features.width(), cfg.interp));
  return serial::reweight(features, weights);
}

}  // namespace halluc::heal::serial
