#pragma once

// Binary tensor container:
//   "VHTN" | version u32 LE | dtype u8, flags u8, 2 pad bytes | ndim u32 LE |
//   dims u32 LE x ndim | payload float32 LE, row-major.
// flags bit 0 marks a file that may carry NaN/Inf.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace halluc {

inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::uint8_t kDtypeFloat64 = 1;  // reserved, rejected
inline constexpr std::uint8_t kFlagAllowNonfinite = 0x1;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
  bool allow_nonfinite = false;

  std::size_t element_count() const;
};

/// Product of dims, with overflow and zero-extent checks.
std::size_t checked_element_count(std::span<const std::uint32_t> dims);

/// Compares dims, flag and payload bit patterns (NaN-safe).
bool bitwise_equal(const Tensor& a, const Tensor& b);

std::string encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

/// T x D per-frame embeddings. Rejects all-zero rows.
class EmbeddingMatrix {
 public:
  static EmbeddingMatrix from_tensor(Tensor tensor);

  std::size_t frames() const { return frames_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t t) const {
    return {values_.data() + t * dim_, dim_};
  }

 private:
  EmbeddingMatrix(std::size_t frames, std::size_t dim, std::vector<float> v)
      : frames_(frames), dim_(dim), values_(std::move(v)) {}

  std::size_t frames_;
  std::size_t dim_;
  std::vector<float> values_;
};

/// H x L x L attention, indexed [head][query][key]; token 0 is [CLS].
/// Construction checks shape only; use validate_attention for contents.
class AttentionTensor {
 public:
  static AttentionTensor from_tensor(Tensor tensor);
  AttentionTensor(std::size_t heads, std::size_t seq_len,
                  std::vector<float> values);

  std::size_t heads() const { return heads_; }
  std::size_t seq_len() const { return seq_len_; }
  float at(std::size_t h, std::size_t q, std::size_t k) const {
    return values_[(h * seq_len_ + q) * seq_len_ + k];
  }
  std::span<const float> values() const { return values_; }
  Tensor to_tensor() const;

 private:
  std::size_t heads_;
  std::size_t seq_len_;
  std::vector<float> values_;
};

/// H_visual x W_visual x C feature grid, channels innermost.
class FeatureGrid {
 public:
  static FeatureGrid from_tensor(Tensor tensor);
  FeatureGrid(std::size_t height, std::size_t width, std::size_t channels,
              std::vector<float> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t positions() const { return height_ * width_; }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return values_[(y * width_ + x) * channels_ + c];
  }
  std::span<const float> values() const { return values_; }
  std::span<float> mutable_values() { return values_; }
  Tensor to_tensor() const;

  bool operator==(const FeatureGrid&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<float> values_;
};

inline constexpr double kDefaultAttentionTolerance = 1e-4;

struct AttentionViolation {
  std::size_t head;
  std::size_t row;
  double row_sum;
  double min_entry;
  double max_entry;

  std::string describe() const;
};

/// One entry per offending (head, row): row sum outside 1 +/- tol, or any
/// entry outside [0, 1].
std::vector<AttentionViolation> validate_attention(
    const AttentionTensor& attention, double tol = kDefaultAttentionTolerance);

}  // namespace halluc
