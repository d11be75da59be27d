#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "halluc/dino_heal.hpp"
#include "halluc/manifest.hpp"
#include "halluc/metrics.hpp"
#include "halluc/pair_miner.hpp"

namespace halluc::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEmptyPipeline = 3;
inline constexpr int kExitShape = 4;
inline constexpr int kExitJoin = 5;

struct RunConfig {
  std::string store_root;
  std::uint64_t seed = 0;
  MinerConfig miner;
  DescConfig desc;
  heal::HealConfig heal;
  ScanMode scan_mode = ScanMode::kWithinVideo;

  Json to_json() const;
  /// Hash of the canonical JSON form; embedded in every output file.
  std::string config_hash() const;
};

enum class ReviewReason { kNoClearAction, kMultipleActions, kIdenticalActions, kOther };

struct ReviewVerdict {
  std::string pair_id;
  bool accept = false;
  ReviewReason reason = ReviewReason::kOther;  // meaningful for rejects
  std::string note;
};

std::string_view to_string(ReviewReason reason);
ReviewReason parse_review_reason(std::string_view name);

/// Reads a verdict file. Within one file the last verdict for a pair wins.
std::vector<ReviewVerdict> read_verdicts(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace halluc::cli
