#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "taxo/error.hpp"
#include "taxo/pipeline.hpp"
#include "taxo/text.hpp"

using namespace taxo;
using namespace taxo::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "taxo_pipeline_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void require_ok(const StageReport& r) {
  CAPTURE(r.stage);
  for (const auto& e : r.errors) MESSAGE(e);
  REQUIRE(r.ok());
}

/// Normalized group-1 items of every separation entry of the toy mock.
std::set<std::string> mock_group_one_words() {
  const auto script = nlohmann::json::parse(oracle::read_file(oracle::data() / "mocks/toy.json"));
  std::set<std::string> words;
  for (const auto& e : script) {
    const auto reply = e.at("reply").get<std::string>();
    if (e.at("match").get<std::string>().find("no relation") == std::string::npos) continue;
    const auto start = reply.find("):");
    const auto end = reply.find('\n', start);
    for (const auto& w : text::word_tokens(reply.substr(start + 2, end - start - 2))) words.insert(w);
  }
  return words;
}

}  // namespace

TEST_CASE("config loading resolves paths against the file") {
  const auto c = load_config(oracle::data() / "toy/toy.ini");
  CHECK(c.merchants == (oracle::data() / "toy/merchants.csv").lexically_normal());
  CHECK(c.mock_script == (oracle::data() / "mocks/toy.json").lexically_normal());
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.keywords.top_k == 30);
  CHECK(c.gibbs.sweeps == 500);
}

TEST_CASE("unknown config keys are rejected") {
  const auto dir = scratch("config");
  std::ofstream(dir / "bad.ini") << "[lda]\nsweepz = 3\n";
  try {
    load_config(dir / "bad.ini");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("lda.sweepz") != std::string::npos);
  }
  std::ofstream(dir / "num.ini") << "[lda]\nsweeps = many\n";
  CHECK_THROWS_AS(load_config(dir / "num.ini"), Error);
}

TEST_CASE("provider selection") {
  PipelineConfig c;
  c.mock_script = oracle::data() / "mocks/toy.json";
  CHECK(make_provider(c)->provider_id() == "mock:toy");
}

TEST_CASE("toy filters equal the golden files and come from group 1") {
  const auto dir = scratch("filters");
  auto c = oracle::toy_config(dir / "out", dir / "cache");
  require_ok(build_filter(c));
  const auto group_one = mock_group_one_words();
  for (const char* f : {"food.txt", "shopping.txt"}) {
    CAPTURE(f);
    const auto produced = oracle::read_file(dir / "out/filters" / f);
    CHECK(produced == oracle::read_file(oracle::fixtures() / "pipeline/golden" / f));
    for (const auto& w : text::split_whitespace(produced)) CHECK(group_one.count(w) == 1);
  }
  const auto again = build_filter(c);
  CHECK(again.up_to_date);
  c.force = true;
  CHECK_FALSE(build_filter(c).up_to_date);
}

TEST_CASE("a mock declaring nothing unrelated yields empty filters") {
  const auto dir = scratch("nothing");
  nlohmann::json script = nlohmann::json::array();
  script.push_back({{"match", "Separate them"}, {"reply", "Group 1: none\nGroup 2: everything listed"}});
  std::ofstream(dir / "none.json") << script.dump();
  auto c = oracle::toy_config(dir / "out", dir / "cache");
  c.mock_script = dir / "none.json";
  require_ok(build_filter(c));
  CHECK(oracle::read_file(dir / "out/filters/food.txt").empty());
  CHECK(oracle::read_file(dir / "out/filters/shopping.txt").empty());
}

TEST_CASE("an empty sub-corpus is recorded as a skip") {
  const auto dir = scratch("empty");
  std::ofstream(dir / "m.csv") << "merchant_id,merchant_name,macro_category,micro_category,description,transaction_count\n"
                                  "b1,Padaria,Food,Bakery,de a o com,3\n";
  auto c = oracle::toy_config(dir / "out", dir / "cache");
  c.merchants = dir / "m.csv";
  c.use_filter = false;
  require_ok(build_taxonomies(c));
  const auto m = nlohmann::json::parse(oracle::read_file(dir / "out/taxonomies/manifest.json"));
  REQUIRE(m["taxonomies"].size() == 1);
  CHECK(m["taxonomies"][0]["status"] == "skipped");
  CHECK(m["taxonomies"][0]["topic"] == "Bakery");
}

TEST_CASE("stage errors carry the stage label") {
  const auto dir = scratch("missing");
  auto c = oracle::toy_config(dir / "out", dir / "cache");
  c.merchants = dir / "nope.csv";
  const auto r = build_filter(c);
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors[0].rfind("build-filter", 0) == 0);
  CHECK(r.errors[0].find("UnreadableFile") != std::string::npos);
  const auto t = tag(c);
  REQUIRE_FALSE(t.ok());
  CHECK(t.errors[0].rfind("tag", 0) == 0);
}

TEST_CASE("toy pipeline is deterministic across output directories") {
  const auto dir = scratch("determinism");
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* out : {"a", "b"}) {
    const auto c = oracle::toy_config(dir / out, dir / "cache");
    require_ok(build_filter(c));
    require_ok(build_taxonomies(c));
    require_ok(tag(c));
    require_ok(expand_eval(c));
  }
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto a = oracle::snapshot(dir / "a");
  const auto b = oracle::snapshot(dir / "b");
  CHECK(a.size() >= 14);
  CHECK(a == b);
  CHECK(elapsed < 120.0);

  const auto m = nlohmann::json::parse(a.at("taxonomies/manifest.json"));
  CHECK(m["taxonomies"].size() == 5);
  for (const auto& e : m["taxonomies"]) CHECK(e["status"] == "ok");
  const auto csv = a.at("expansion/scores.csv");
  CHECK(csv.rfind("provider,", 0) == 0);
}

TEST_CASE("semeval loading and oracle expansion through the stages") {
  const auto dir = scratch("semeval");
  auto c = oracle::toy_config(dir / "out", dir / "cache");
  c.semeval = {oracle::data() / "semeval/food_sample.tsv"};
  require_ok(load_semeval(c));
  CHECK(fs::exists(dir / "out/semeval/food_sample.json"));
  c.oracle = true;
  require_ok(expand_eval(c));
  const auto csv = oracle::read_file(dir / "out/expansion/scores.csv");
  CHECK(csv.find("1.0000") != std::string::npos);

  c.semeval = {oracle::fixtures() / "taxonomy/two_cycle.tsv"};
  const auto bad = load_semeval(c);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.errors[0].find("CycleDetected") != std::string::npos);
}

TEST_CASE("coherence stage over calibrated judgments") {
  const auto dir = scratch("coherence");
  auto c = oracle::toy_config(dir / "out", dir / "cache");
  fs::create_directories(dir / "out/tags");
  fs::copy_file(oracle::fixtures() / "evaluation/merchant_tags.jsonl", dir / "out/tags/tags.jsonl");
  c.judgments = oracle::fixtures() / "evaluation/merchant_judgments.jsonl";
  const auto r = coherence(c);
  for (const auto& e : r.errors) MESSAGE(e);
  CHECK(r.ok());
  bool found = false;
  for (const auto& line : r.lines) found = found || line.find("92.30%") != std::string::npos;
  CHECK(found);
}
