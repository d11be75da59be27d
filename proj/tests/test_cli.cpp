#include <doctest.h>

#include <cmath>
#include <map>

#include "halluc/cli.hpp"
#include "halluc/manifest.hpp"
#include "halluc/tensor_store.hpp"
#include "support.hpp"

using namespace halluc;
using testsupport::Gen;
using testsupport::run_cli;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

std::string s(const fs::path& p) { return p.string(); }

// Mined store with verdicts accepting the first `accept` pairs (all when 0).
std::size_t mine_and_accept(const TempDir& dir, std::size_t accept = 0) {
  Gen g(11);
  auto corpus = testsupport::planted_corpus(5, 6, 5, 2, 5);
  testsupport::write_store(corpus, dir.path(), g);
  auto r = run_cli({"--store", s(dir.path()), "mine"});
  REQUIRE(r.code == 0);
  const auto pairs = read_jsonl(dir / "pairs.jsonl");
  std::string batch;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool yes = accept == 0 || i < accept;
    Json v = {{"pair_id", pairs[i].at("clip_a").get<std::string>() + "|" +
                              pairs[i].at("clip_b").get<std::string>()},
              {"verdict", yes ? "accept" : "reject"}};
    if (!yes) v["reason"] = "other";
    batch += v.dump() + "\n";
  }
  testsupport::write_file(dir / "batch.jsonl", batch);
  r = run_cli({"--store", s(dir.path()), "review", "--batch", s(dir / "batch.jsonl")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return pairs.size();
}

std::map<std::string, std::size_t> kind_counts(const fs::path& questions) {
  std::map<std::string, std::size_t> c;
  for (const auto& q : read_jsonl(questions)) ++c[q.at("kind").get<std::string>()];
  return c;
}

void write_frame(const fs::path& dir, const std::string& id, const AttentionTensor& a,
                 const FeatureGrid& f) {
  write_tensor(dir / (id + ".attn.vhtn"), a.to_tensor());
  write_tensor(dir / (id + ".feat.vhtn"), f.to_tensor());
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run_cli({}).code == cli::kExitInput);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
  CHECK(run_cli({"bogus"}).code == cli::kExitInput);
  CHECK(run_cli({"--interp", "cubic", "mine"}).code == cli::kExitInput);
  CHECK(run_cli({"--lambda-sem", "1.5", "--store", "/nonexistent", "mine"}).code == cli::kExitInput);
}

TEST_CASE("mine") {
  TempDir dir("cli_mine");
  SUBCASE("missing store") {
    auto r = run_cli({"--store", s(dir / "nope"), "mine"});
    CHECK(r.code == cli::kExitInput);
    CHECK(r.err.find("store directory") != std::string::npos);
  }
  SUBCASE("empty corpus writes empty manifests") {
    testsupport::write_file(dir / "clips.jsonl", "");
    auto r = run_cli({"--store", s(dir.path()), "mine"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.err.find("empty corpus") != std::string::npos);
    CHECK(read_jsonl(dir / "pairs.jsonl").empty());
  }
  SUBCASE("missing embedding file") {
    Gen g(1);
    auto corpus = testsupport::planted_corpus(1, 2, 3, 2, 3);
    testsupport::write_store(corpus, dir.path(), g);
    fs::remove(dir / "visual" / "v001_c02.vhtn");
    auto r = run_cli({"--store", s(dir.path()), "mine"});
    CHECK(r.code == cli::kExitInput);
    CHECK(r.err.find("v001_c02") != std::string::npos);
  }
  SUBCASE("planted corpus") {
    Gen g(2);
    auto corpus = testsupport::planted_corpus(3, 4, 5, 2, 5);
    testsupport::write_store(corpus, dir.path(), g);
    auto r = run_cli({"--store", s(dir.path()), "--seed", "9", "mine"});
    REQUIRE(r.code == cli::kExitOk);
    const auto pairs = read_jsonl(dir / "pairs.jsonl");
    CHECK(!pairs.empty());
    for (const auto& p : pairs) {
      CHECK(p.at("seed") == 9);
      CHECK(p.at("config_hash").is_string());
      CHECK(p.at("sem_sim").get<double>() >= 0.9);
      CHECK(p.at("vis_sim").get<double>() < 0.6);
    }
    const auto first = testsupport::slurp(dir / "sth.jsonl");
    REQUIRE(run_cli({"--store", s(dir.path()), "--seed", "9", "mine"}).code == 0);
    CHECK(testsupport::slurp(dir / "sth.jsonl") == first);
  }
}

TEST_CASE("review") {
  TempDir dir("cli_review");
  const auto n = mine_and_accept(dir);
  REQUIRE(n >= 2);
  CHECK(read_jsonl(dir / "verdicts.jsonl").size() == n);

  SUBCASE("a second batch for the same pairs is refused") {
    auto r = run_cli({"--store", s(dir.path()), "review", "--batch", s(dir / "batch.jsonl")});
    CHECK(r.code == cli::kExitInput);
    CHECK(r.err.find("already has a verdict") != std::string::npos);
  }
  SUBCASE("unknown pair") {
    testsupport::write_file(dir / "other.jsonl", R"({"pair_id": "x|y", "verdict": "accept"})" "\n");
    fs::remove(dir / "verdicts.jsonl");
    auto r = run_cli({"--store", s(dir.path()), "review", "--batch", s(dir / "other.jsonl")});
    CHECK(r.code == cli::kExitInput);
    CHECK(!fs::exists(dir / "verdicts.jsonl"));
  }
  SUBCASE("interactive session") {
    fs::remove(dir / "verdicts.jsonl");
    auto r = run_cli({"--store", s(dir.path()), "review"}, "a\nr 9\nr 2 two things at once\nq\n");
    CHECK(r.code == cli::kExitOk);
    CHECK(r.err.find("reason number") != std::string::npos);
    const auto v = cli::read_verdicts(dir / "verdicts.jsonl");
    REQUIRE(v.size() == 2);
    std::size_t accepted = 0;
    for (const auto& x : v) {
      accepted += x.accept;
      if (!x.accept) {
        CHECK(x.reason == cli::ReviewReason::kMultipleActions);
        CHECK(x.note == "two things at once");
      }
    }
    CHECK(accepted == 1);
    // resuming skips reviewed pairs and closed input keeps progress
    r = run_cli({"--store", s(dir.path()), "review"}, "s\n");
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find(std::to_string(n - 2) + " pairs awaiting review") != std::string::npos);
    CHECK(cli::read_verdicts(dir / "verdicts.jsonl").size() == 2);
  }
}

TEST_CASE("generate") {
  TempDir dir("cli_generate");
  SUBCASE("no accepted pairs exits 3") {
    const auto n = mine_and_accept(dir, 0);
    (void)n;
    std::string batch;
    for (const auto& v : read_jsonl(dir / "verdicts.jsonl")) {
      batch += Json{{"pair_id", v.at("pair_id")}, {"verdict", "reject"}, {"reason", "other"}}.dump() + "\n";
    }
    testsupport::write_file(dir / "verdicts.jsonl", batch);
    auto r = run_cli({"--store", s(dir.path()), "generate"});
    CHECK(r.code == cli::kExitEmptyPipeline);
    CHECK(!fs::exists(dir / "questions.jsonl"));
  }
  SUBCASE("ten accepted pairs") {
    const auto n = mine_and_accept(dir, 10);
    REQUIRE(n > 10);
    auto r = run_cli({"--store", s(dir.path()), "generate"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    const auto c = kind_counts(dir / "questions.jsonl");
    CHECK(c.at("binary") == 40);
    CHECK(c.at("mcq") == 20);
    std::size_t yes = 0, no = 0;
    for (const auto& q : read_jsonl(dir / "questions.jsonl")) {
      if (q.at("kind") != "open_sth") continue;
      (q.at("ground_truth").at("change") == "Yes" ? yes : no) += 1;
    }
    CHECK(yes == no);
    CHECK(r.out.find("accepted pairs 10") != std::string::npos);
  }
  SUBCASE("missing verdict file") {
    mine_and_accept(dir);
    fs::remove(dir / "verdicts.jsonl");
    CHECK(run_cli({"--store", s(dir.path()), "generate"}).code == cli::kExitInput);
  }
}

TEST_CASE("heal") {
  TempDir dir("cli_heal");
  Gen g(3);
  SUBCASE("uniform attention scales every feature by sigma(1/L)") {
    auto f = testsupport::random_features(g, 8, 8, 4);
    write_frame(dir.path(), "0", testsupport::uniform_attention(2, 17), f);
    auto r = run_cli({"heal", "--frames", s(dir.path())});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    const auto healed = FeatureGrid::from_tensor(read_tensor(dir / "0.healed.vhtn"));
    const double w = 1.0 / (1.0 + std::exp(-1.0 / 17.0));
    for (std::size_t i = 0; i < f.values().size(); ++i) {
      CHECK(std::abs(healed.values()[i] - f.values()[i] * w) < 1e-6);
    }
    const auto side = Json::parse(testsupport::slurp(dir / "0.healed.json"));
    CHECK(side.at("patch_grid").at("height") == 4);
    CHECK(side.at("config").at("interp") == "bilinear");
  }
  SUBCASE("explicit grid for a non-square token count") {
    write_frame(dir.path(), "a", testsupport::random_attention(g, 1, 7),
                testsupport::random_features(g, 4, 6, 2));
    CHECK(run_cli({"heal", "--frames", s(dir.path())}).code == cli::kExitShape);
    auto r = run_cli({"heal", "--frames", s(dir.path()), "--grid-h", "2", "--grid-w", "3"});
    CHECK(r.code == cli::kExitOk);
    testsupport::write_file(dir / "a.grid.json", R"({"height": 3, "width": 2})");
    r = run_cli({"heal", "--frames", s(dir.path())});
    CHECK(r.code == cli::kExitOk);
    CHECK(Json::parse(testsupport::slurp(dir / "a.healed.json")).at("patch_grid").at("width") == 2);
  }
  SUBCASE("a bad frame stops the run before any output") {
    fs::create_directories(dir / "out");
    write_frame(dir.path(), "1", testsupport::random_attention(g, 2, 10),
                testsupport::random_features(g, 3, 3, 2));
    write_frame(dir.path(), "2", testsupport::random_attention(g, 2, 10),
                testsupport::random_features(g, 3, 3, 2));
    write_tensor(dir / "2.attn.vhtn", Tensor{{2, 3}, {1, 0, 0, 1, 0, 0}});
    auto r = run_cli({"heal", "--frames", s(dir.path()), "--out", s(dir / "out")});
    CHECK(r.code == cli::kExitShape);
    CHECK(r.err.find("frame 2") != std::string::npos);
    CHECK(fs::is_empty(dir / "out"));
  }
  SUBCASE("rows that do not sum to one") {
    auto a = testsupport::uniform_attention(1, 5);
    auto t = a.to_tensor();
    t.values[0] = 0.9f;
    write_tensor(dir / "x.attn.vhtn", t);
    write_tensor(dir / "x.feat.vhtn", testsupport::random_features(g, 2, 2, 1).to_tensor());
    CHECK(run_cli({"heal", "--frames", s(dir.path())}).code == cli::kExitInput);
  }
  SUBCASE("empty directory") {
    CHECK(run_cli({"heal", "--frames", s(dir.path())}).code == cli::kExitInput);
  }
}

TEST_CASE("score") {
  TempDir dir("cli_score");
  mine_and_accept(dir, 6);
  REQUIRE(run_cli({"--store", s(dir.path()), "generate"}).code == 0);
  const auto questions = read_jsonl(dir / "questions.jsonl");

  SUBCASE("constant Yes") {
    std::string text;
    for (const auto& q : questions) {
      text += Json{{"qa_id", q.at("qa_id")}, {"raw_text", "Yes."}}.dump() + "\n";
    }
    testsupport::write_file(dir / "responses.jsonl", text);
    auto r = run_cli({"--store", s(dir.path()), "score"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    const auto report = Json::parse(testsupport::slurp(dir / "report.json"));
    CHECK(report.at("metrics").at("sth_mcc") == 0.0);
    CHECK(report.at("metrics").at("sth_score_cls") == 0.25);
    CHECK(report.at("metrics").at("ach_binary_acc") == 0.0);
    CHECK(r.err.find("trigram") != std::string::npos);
    // byte-identical on a rerun
    const auto first = testsupport::slurp(dir / "report.json");
    REQUIRE(run_cli({"--store", s(dir.path()), "score"}).code == 0);
    CHECK(testsupport::slurp(dir / "report.json") == first);
  }
  SUBCASE("orphan response exits 5") {
    testsupport::write_file(dir / "responses.jsonl",
                            R"({"qa_id": "no-such-item", "raw_text": "Yes"})" "\n");
    CHECK(run_cli({"--store", s(dir.path()), "score"}).code == cli::kExitJoin);
  }
  SUBCASE("sentences out lists truth scenes") {
    testsupport::write_file(dir / "responses.jsonl", "");
    auto r = run_cli({"--store", s(dir.path()), "score", "--sentences-out", s(dir / "sent.txt")});
    CHECK(r.code == cli::kExitOk);
    const auto sentences = testsupport::slurp(dir / "sent.txt");
    for (const auto& q : questions) {
      const auto& t = q.at("ground_truth");
      if (q.at("kind") == "open_sth" && t.at("change") == "Yes") {
        CHECK(sentences.find(t.at("scene_to").get<std::string>() + "\n") != std::string::npos);
      }
    }
  }
}
