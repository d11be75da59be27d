#include "halluc/tensor_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "halluc/error.hpp"

namespace halluc {
namespace {

constexpr char kMagic[4] = {'V', 'H', 'T', 'N'};
constexpr std::size_t kFixedHeader = 16;  // magic, version, dtype block, ndim

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(
             static_cast<unsigned char>(bytes[offset + b]))
         << (8 * b);
  }
  return v;
}

void check_finite(std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::kValidation,
           "non-finite value at payload index " + std::to_string(i) +
               " (allow_nonfinite flag not set)");
    }
  }
}

}  // namespace

std::size_t checked_element_count(std::span<const std::uint32_t> dims) {
  if (dims.empty()) fail(ErrorCode::kFormat, "tensor has no dimensions");
  std::size_t n = 1;
  for (auto d : dims) {
    if (d == 0) fail(ErrorCode::kFormat, "tensor has a zero extent");
    if (n > std::numeric_limits<std::size_t>::max() / d) {
      fail(ErrorCode::kFormat, "tensor extents overflow");
    }
    n *= d;
  }
  return n;
}

std::size_t Tensor::element_count() const { return checked_element_count(dims); }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.dims == b.dims && a.allow_nonfinite == b.allow_nonfinite &&
         a.values.size() == b.values.size() &&
         (a.values.empty() ||
          std::memcmp(a.values.data(), b.values.data(),
                      a.values.size() * sizeof(float)) == 0);
}

std::string encode_tensor(const Tensor& tensor) {
  const std::size_t count = checked_element_count(tensor.dims);
  if (count != tensor.values.size()) {
    fail(ErrorCode::kFormat, "payload length " +
                                 std::to_string(tensor.values.size()) +
                                 " does not match dims product " +
                                 std::to_string(count));
  }
  if (!tensor.allow_nonfinite) check_finite(tensor.values);

  std::string out;
  out.reserve(kFixedHeader + 4 * tensor.dims.size() + 4 * count);
  out.append(kMagic, 4);
  put_u32(out, kTensorVersion);
  out.push_back(static_cast<char>(kDtypeFloat32));
  out.push_back(static_cast<char>(tensor.allow_nonfinite ? kFlagAllowNonfinite : 0));
  out.push_back('\0');
  out.push_back('\0');
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kUnsupportedFormat, "bad magic (expected \"VHTN\")");
  }
  if (bytes.size() < kFixedHeader) {
    fail(ErrorCode::kCorruptFile, "truncated header");
  }
  const auto version = get_u32(bytes, 4);
  if (version != kTensorVersion) {
    fail(ErrorCode::kUnsupportedFormat,
         "unsupported version " + std::to_string(version));
  }
  const auto dtype = static_cast<std::uint8_t>(bytes[8]);
  if (dtype == kDtypeFloat64) {
    fail(ErrorCode::kUnsupportedFormat,
         "float64 tensors are not supported; export as float32");
  }
  if (dtype != kDtypeFloat32) {
    fail(ErrorCode::kUnsupportedFormat,
         "unknown dtype code " + std::to_string(dtype));
  }
  const auto flags = static_cast<std::uint8_t>(bytes[9]);

  const auto ndim = get_u32(bytes, 12);
  if (ndim == 0) fail(ErrorCode::kCorruptFile, "ndim is zero");
  if (bytes.size() < kFixedHeader + std::size_t{4} * ndim) {
    fail(ErrorCode::kCorruptFile, "truncated dims block");
  }
  Tensor t;
  t.allow_nonfinite = (flags & kFlagAllowNonfinite) != 0;
  t.dims.resize(ndim);
  for (std::uint32_t i = 0; i < ndim; ++i) {
    t.dims[i] = get_u32(bytes, kFixedHeader + 4 * i);
  }
  std::size_t count = 0;
  try {
    count = checked_element_count(t.dims);
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptFile, e.what());
  }
  const std::size_t payload_offset = kFixedHeader + 4 * std::size_t{ndim};
  const std::size_t expected = payload_offset + 4 * count;
  if (bytes.size() != expected) {
    fail(ErrorCode::kCorruptFile,
         "payload length mismatch: file has " + std::to_string(bytes.size()) +
             " bytes, header implies " + std::to_string(expected));
  }
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes, payload_offset + 4 * i));
  }
  if (!t.allow_nonfinite) check_finite(t.values);
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  const std::string bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kStorage, "cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorCode::kStorage, "write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kStorage, "cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_tensor(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

EmbeddingMatrix EmbeddingMatrix::from_tensor(Tensor tensor) {
  if (tensor.dims.size() != 2) {
    fail(ErrorCode::kShape, "embedding matrix must be 2-D (frames x dim)");
  }
  const std::size_t frames = tensor.dims[0];
  const std::size_t dim = tensor.dims[1];
  if (tensor.values.size() != frames * dim) {
    fail(ErrorCode::kFormat, "embedding payload does not match dims");
  }
  for (std::size_t t = 0; t < frames; ++t) {
    const auto first = tensor.values.begin() + static_cast<std::ptrdiff_t>(t * dim);
    if (std::all_of(first, first + static_cast<std::ptrdiff_t>(dim),
                    [](float v) { return v == 0.0f; })) {
      fail(ErrorCode::kDegenerateEmbedding,
           "embedding row " + std::to_string(t) + " is all zeros");
    }
  }
  return EmbeddingMatrix(frames, dim, std::move(tensor.values));
}

AttentionTensor::AttentionTensor(std::size_t heads, std::size_t seq_len,
                                 std::vector<float> values)
    : heads_(heads), seq_len_(seq_len), values_(std::move(values)) {
  if (heads_ < 1) fail(ErrorCode::kShape, "attention needs at least one head");
  if (seq_len_ < 2) fail(ErrorCode::kShape, "attention seq_len must be >= 2");
  if (values_.size() != heads_ * seq_len_ * seq_len_) {
    fail(ErrorCode::kShape, "attention payload is not H x L x L");
  }
}

AttentionTensor AttentionTensor::from_tensor(Tensor tensor) {
  if (tensor.dims.size() != 3 || tensor.dims[1] != tensor.dims[2]) {
    fail(ErrorCode::kShape, "attention tensor must be H x L x L");
  }
  return AttentionTensor(tensor.dims[0], tensor.dims[1], std::move(tensor.values));
}

Tensor AttentionTensor::to_tensor() const {
  return Tensor{{static_cast<std::uint32_t>(heads_),
                 static_cast<std::uint32_t>(seq_len_),
                 static_cast<std::uint32_t>(seq_len_)},
                values_,
                false};
}

FeatureGrid::FeatureGrid(std::size_t height, std::size_t width,
                         std::size_t channels, std::vector<float> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (height_ < 1 || width_ < 1 || channels_ < 1) {
    fail(ErrorCode::kShape, "feature grid extents must be >= 1");
  }
  if (values_.size() != height_ * width_ * channels_) {
    fail(ErrorCode::kShape, "feature payload is not H x W x C");
  }
}

FeatureGrid FeatureGrid::from_tensor(Tensor tensor) {
  if (tensor.dims.size() != 3) {
    fail(ErrorCode::kShape, "feature tensor must be H x W x C");
  }
  return FeatureGrid(tensor.dims[0], tensor.dims[1], tensor.dims[2],
                     std::move(tensor.values));
}

Tensor FeatureGrid::to_tensor() const {
  return Tensor{{static_cast<std::uint32_t>(height_),
                 static_cast<std::uint32_t>(width_),
                 static_cast<std::uint32_t>(channels_)},
                values_,
                false};
}

std::string AttentionViolation::describe() const {
  std::ostringstream os;
  os << "head " << head << ", row " << row << ": sum=" << row_sum
     << " min=" << min_entry << " max=" << max_entry;
  return os.str();
}

std::vector<AttentionViolation> validate_attention(const AttentionTensor& attention,
                                                   double tol) {
  std::vector<AttentionViolation> out;
  const std::size_t L = attention.seq_len();
  for (std::size_t h = 0; h < attention.heads(); ++h) {
    for (std::size_t q = 0; q < L; ++q) {
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      bool finite = true;
      for (std::size_t k = 0; k < L; ++k) {
        const double v = attention.at(h, q, k);
        finite = finite && std::isfinite(v);
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const bool bad = !finite || std::abs(sum - 1.0) > tol || lo < 0.0 || hi > 1.0;
      if (bad) out.push_back({h, q, sum, lo, hi});
    }
  }
  return out;
}

}  // namespace halluc
