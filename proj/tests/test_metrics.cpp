#include <doctest.h>

#include <cmath>

#include "halluc/error.hpp"
#include "halluc/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace halluc;
using testsupport::Gen;

namespace {

// Unit vector at cosine s from e1 in 2-D.
Embedding at_cosine(double s) { return {s, std::sqrt(1.0 - s * s)}; }

// Similarity whose oracle description score equals `target`, by bisection.
double invert_desc(double target, double thr) {
  double lo = thr, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle::desc_score(mid, thr) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("accuracy") {
  CHECK(accuracy(3, 4) == 0.75);
  CHECK(accuracy(0, 7) == 0.0);
  CHECK(accuracy(7, 7) == 1.0);
  try {
    accuracy(0, 0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyTask);
  }
}

TEST_CASE("mcc") {
  CHECK(mcc({5, 0, 0, 5}) == 1.0);
  CHECK(mcc({0, 5, 5, 0}) == -1.0);
  CHECK(mcc({7, 0, 7, 0}) == 0.0);  // constant Yes on balanced truth
  CHECK(mcc({0, 7, 0, 7}) == 0.0);  // constant No
  CHECK(std::abs(mcc({3, 2, 1, 4}) - oracle::mcc(3, 2, 1, 4)) < 1e-12);
  // (3*4 - 1*2) / sqrt(4*5*5*6)
  CHECK(std::abs(oracle::mcc(3, 2, 1, 4) - 10.0 / std::sqrt(600.0)) < 1e-15);
  CHECK_THROWS_AS(mcc({0, 0, 0, 0}), Error);

  Gen g(4);
  for (int n = 0; n < 2000; ++n) {
    const std::uint64_t a = g.below(51), b = g.below(51), c = g.below(51), d = g.below(51);
    if (a + b + c + d == 0) continue;
    const double m = mcc({a, b, c, d});
    CHECK(std::abs(m - oracle::mcc(a, b, c, d)) < 1e-12);
    CHECK(m >= -1.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("score_cls") {
  CHECK(score_cls(1.0) == 1.0);
  CHECK(score_cls(0.0) == 0.25);
  CHECK(score_cls(-1.0) == 0.0);
  double prev = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const double v = score_cls(-1.0 + i / 100.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(score_cls(1.5), Error);
}

TEST_CASE("sigmoid matches the high-precision oracle") {
  CHECK(std::abs(sigmoid(1.0) - 0.7310585786300049) < 1e-15);
  for (double x = -10; x <= 10; x += 0.37) {
    CHECK(std::abs(sigmoid(x) - static_cast<double>(oracle::sigmoid(oracle::Big(x)))) < 1e-15);
  }
}

TEST_CASE("description score shape") {
  const double thr = 0.5;
  CHECK(desc_score_from_similarity(1.0, thr) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(desc_score_from_similarity(thr, thr) == 0.0);
  CHECK(desc_score_from_similarity(0.2, thr) == 0.0);
  CHECK(desc_score_from_similarity(-1.0, thr) == 0.0);
  CHECK(std::abs(desc_score_from_similarity(0.8, 0.5) - oracle::desc_score(0.8, 0.5)) < 1e-12);
  CHECK(std::abs(oracle::desc_score(0.8, 0.5) - 0.6216) < 1e-4);
  CHECK(desc_score_from_similarity(thr + 1e-9, thr) < 1e-8);  // continuous at the threshold
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double s = thr + (1.0 - thr) * i / 1000.0;
    const double v = desc_score_from_similarity(s, thr);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("score_desc_one through a provider") {
  CacheEmbeddingProvider cache({{"truth", {1.0, 0.0}}, {"close", at_cosine(0.8)}});
  DescConfig cfg;
  CHECK(score_desc_one("truth", "truth", cache, cfg) == 1.0);
  CHECK(std::abs(score_desc_one("close", "truth", cache, cfg) - oracle::desc_score(0.8, 0.5)) < 1e-12);
  CHECK(score_desc_one("", "truth", cache, cfg) == 0.0);
  CHECK_THROWS_AS(score_desc_one("truth", "", cache, cfg), Error);
  try {
    score_desc_one("unknown", "truth", cache, cfg);
    FAIL("expected provider error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProvider);
  }
}

TEST_CASE("score_desc averages the two scenes (0.727, 0.892) -> 0.8095") {
  const double s1 = invert_desc(0.727, 0.5), s2 = invert_desc(0.892, 0.5);
  CacheEmbeddingProvider cache({{"in a swimming pool", {1.0, 0.0}},
                                {"in a bathtub", {0.0, 1.0}},
                                {"pool", at_cosine(s1)},
                                {"bathtub", {std::sqrt(1 - s2 * s2), s2}}});
  DescConfig cfg;
  CHECK(std::abs(score_desc_one("pool", "in a swimming pool", cache, cfg) - 0.727) < 1e-9);
  CHECK(std::abs(score_desc("pool", "bathtub", "in a swimming pool", "in a bathtub", cache, cfg) -
                 0.8095) < 1e-9);
  // one empty scene gives mean(0, s2)
  CHECK(std::abs(score_desc("", "bathtub", "in a swimming pool", "in a bathtub", cache, cfg) -
                 0.892 / 2) < 1e-9);
  CHECK(score_desc("in a swimming pool", "in a bathtub", "in a swimming pool", "in a bathtub",
                   cache, cfg) == 1.0);
}

TEST_CASE("score_overall") {
  CHECK(score_overall(0.25, 0.5, 0.6) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(score_overall(0.3, 0.9, 1.0) == 0.3);
  // known decomposition rows, rounded to two percent decimals
  CHECK(std::abs(score_overall(0.8744, 0.3189, 0.6) - 0.6522) < 1e-12);
  CHECK(std::abs(score_overall(0.25, 0.3779, 0.6) - 0.3012) < 5e-5);
  CHECK(std::abs(score_overall(0.25, 0.5011, 0.6) - 0.3504) < 5e-5);
}

TEST_CASE("DescConfig validation") {
  CHECK_NOTHROW(DescConfig{}.validate());
  CHECK_THROWS_AS((DescConfig{1.0, 0.6}.validate()), Error);
  CHECK_THROWS_AS((DescConfig{0.5, 1.2}.validate()), Error);
}

TEST_CASE("hashed trigram provider") {
  HashedTrigramProvider p;
  auto a = p.embed("in a swimming pool");
  CHECK(a == p.embed("in a swimming pool"));
  CHECK(a == p.embed("In a  Swimming Pool "));
  double n = 0;
  for (double x : a) n += x * x;
  CHECK(std::abs(n - 1.0) < 1e-12);
  DescConfig cfg;
  const double close = score_desc_one("a swimming pool", "in a swimming pool", p, cfg);
  const double far = score_desc_one("kitchen", "in a swimming pool", p, cfg);
  CHECK(close > far);
  CHECK(score_desc_one("pool", "pool", p, cfg) == 1.0);
}

TEST_CASE("cache provider loads an index file") {
  testsupport::TempDir dir("cache");
  Tensor t{{3, 2}, {1, 0, 0, 1, 0.6f, 0.8f}};
  write_tensor(dir / "emb.vhtn", t);
  testsupport::write_file(dir / "index.json",
                          R"({"tensor": "emb.vhtn", "sentences": ["a", "b", "c"], "checkpoint": "x"})");
  auto cache = CacheEmbeddingProvider::load(dir / "index.json");
  CHECK(cache.size() == 3);
  CHECK(cache.embed("c")[1] == doctest::Approx(0.8));

  testsupport::write_file(dir / "bad.json", R"({"tensor": "emb.vhtn", "sentences": ["a", "b"]})");
  CHECK_THROWS_AS(CacheEmbeddingProvider::load(dir / "bad.json"), Error);
  testsupport::write_file(dir / "dup.json", R"({"tensor": "emb.vhtn", "sentences": ["a", "a", "b"]})");
  CHECK_THROWS_AS(CacheEmbeddingProvider::load(dir / "dup.json"), Error);
}
