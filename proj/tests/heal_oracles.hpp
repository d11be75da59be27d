#pragma once
// Loop-by-loop references for each reweighting stage, written from the stage
// definitions without reusing library code.

#include <algorithm>
#include <cmath>
#include <vector>

#include "halluc/tensor_store.hpp"
#include "oracles.hpp"

namespace heal_oracle {

using Grid = std::vector<std::vector<double>>;

inline std::vector<std::vector<double>> head_average(const halluc::AttentionTensor& a) {
  const auto L = a.seq_len();
  std::vector<std::vector<double>> m(L, std::vector<double>(L, 0.0));
  for (std::size_t q = 0; q < L; ++q) {
    for (std::size_t k = 0; k < L; ++k) {
      long double s = 0;
      for (std::size_t h = 0; h < a.heads(); ++h) s += a.at(h, q, k);
      m[q][k] = static_cast<double>(s / a.heads());
    }
  }
  return m;
}

inline std::vector<double> cls_row(const std::vector<std::vector<double>>& m) {
  return {m[0].begin() + 1, m[0].end()};
}

inline std::vector<double> query_sum(const std::vector<std::vector<double>>& m) {
  std::vector<double> s;
  for (std::size_t j = 1; j < m.size(); ++j) {
    long double acc = 0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m[i][j];
    s.push_back(static_cast<double>(acc));
  }
  return s;
}

inline Grid reshape(const std::vector<double>& s, std::size_t h, std::size_t w) {
  Grid g(h, std::vector<double>(w));
  for (std::size_t i = 0; i < h * w; ++i) g[i / w][i % w] = s[i];
  return g;
}

inline double source_coord(std::size_t i, std::size_t src, std::size_t dst) {
  const double c = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
  return std::clamp(c, 0.0, static_cast<double>(src - 1));
}

inline Grid bilinear(const Grid& g, std::size_t H, std::size_t W) {
  const std::size_t h = g.size(), w = g[0].size();
  Grid out(H, std::vector<double>(W));
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      const double sy = source_coord(i, h, H), sx = source_coord(j, w, W);
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
      const double fy = sy - y0, fx = sx - x0;
      out[i][j] = (1 - fy) * ((1 - fx) * g[y0][x0] + fx * g[y0][x1]) +
                  fy * ((1 - fx) * g[y1][x0] + fx * g[y1][x1]);
    }
  }
  return out;
}

inline Grid nearest(const Grid& g, std::size_t H, std::size_t W) {
  const std::size_t h = g.size(), w = g[0].size();
  Grid out(H, std::vector<double>(W));
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      const auto y = static_cast<std::size_t>(std::round(source_coord(i, h, H)));
      const auto x = static_cast<std::size_t>(std::round(source_coord(j, w, W)));
      out[i][j] = g[y][x];
    }
  }
  return out;
}

inline std::vector<double> sigmoid_flat(const Grid& g) {
  std::vector<double> out;
  for (const auto& row : g) {
    for (double v : row) out.push_back(static_cast<double>(oracle::sigmoid(oracle::Big(v))));
  }
  return out;
}

inline std::vector<float> reweight(const halluc::FeatureGrid& f, const std::vector<double>& w) {
  std::vector<float> out;
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      for (std::size_t c = 0; c < f.channels(); ++c) {
        out.push_back(static_cast<float>(static_cast<double>(f.at(y, x, c)) * w[y * f.width() + x]));
      }
    }
  }
  return out;
}

}  // namespace heal_oracle
