#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "doctest.h"
#include "oracles.hpp"
#include "taxo/error.hpp"
#include "taxo/llm.hpp"
#include "taxo/text.hpp"

using namespace taxo;
using namespace taxo::llm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

std::set<std::string> normalized(const std::vector<std::string>& v) {
  std::set<std::string> s;
  for (const auto& x : v) s.insert(text::normalize_label(x));
  return s;
}

std::vector<std::string> strings(const nlohmann::json& j) { return j.get<std::vector<std::string>>(); }

}  // namespace

TEST_CASE("templates render their placeholders") {
  const auto p = render(TemplateId::SeparateTerms, {{"words_list", std::vector<std::string>{"a", "b"}}, {"type", "Pizzeria"}});
  CHECK(p.find("list: a, b.") != std::string::npos);
  CHECK(p.find("no relation to the topic Pizzeria.") != std::string::npos);
  CHECK(render(TemplateId::ParentQuery, {{"new_term", "sushi"}}) == "Who is the father of sushi?");
  CHECK(render(TemplateId::TaxonomyContext, {{"node", "root"}, {"children", std::vector<std::string>{"x", "y"}}}) ==
        "Childs of root: [x,y]");
  CHECK(render(TemplateId::BuildHierarchy, {{"words_list", std::vector<std::string>{"x"}}}).find("{\"key\"") !=
        std::string::npos);
  CHECK_THROWS_AS(render(TemplateId::ParentQuery, {}), Error);
}

TEST_CASE("mock provider answers with the first matching entry") {
  MockProvider mock(std::vector<MockEntry>{{"father of", "A"}, {"father of sushi", "B"}});
  CHECK(mock.complete("Who is the father of sushi?", std::chrono::milliseconds(10)) == "A");
  CHECK(mock.calls() == 1);
  CHECK_THROWS_AS(mock.complete("unrelated", std::chrono::milliseconds(10)), Error);
}

TEST_CASE("loaded script model id follows the contents") {
  const auto dir = fresh_dir("taxo_mock_script");
  fs::create_directories(dir);
  const auto p = dir / "s.json";
  std::ofstream(p) << R"([{"match": "x", "reply": "1"}])";
  const auto a = MockProvider::load(p);
  std::ofstream(p) << R"([{"match": "x", "reply": "2"}])";
  const auto b = MockProvider::load(p);
  CHECK(a->model_id() != b->model_id());
  CHECK(a->model_id().rfind("scripted-", 0) == 0);
}

TEST_CASE("cache key separates provider, model and prompt") {
  CHECK(cache_key("p", "m", "x") != cache_key("p", "m2", "x"));
  CHECK(cache_key("pm", "", "x") != cache_key("p", "m", "x"));
  CHECK(cache_key("p", "m", "x").size() == 64);
}

TEST_CASE("transient failures are retried within the budget") {
  auto mock = std::make_shared<MockProvider>(std::vector<MockEntry>{{"q", "ok", 2}});
  RetryBudget budget{3, std::chrono::milliseconds(100), std::chrono::milliseconds(0)};
  const auto ex = complete("q", *mock, budget);
  CHECK(ex.raw_reply == "ok");
  CHECK(ex.attempts == 3);

  auto stubborn = std::make_shared<MockProvider>(std::vector<MockEntry>{{"q", "ok", 5}});
  try {
    complete("q", *stubborn, budget);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderUnavailable);
  }
  CHECK(stubborn->calls() == 4);
}

TEST_CASE("gateway serves repeats from the cache") {
  const auto dir = fresh_dir("taxo_gateway_cache");
  auto mock = std::make_shared<MockProvider>(std::vector<MockEntry>{{"q", "reply"}});
  {
    Gateway gw(mock, dir);
    CHECK_FALSE(gw.complete("q1").from_cache);
    CHECK(gw.complete("q1").from_cache);
    CHECK(gw.network_requests() == 1);
  }
  Gateway again(mock, dir);
  const auto ex = again.complete("q1");
  CHECK(ex.from_cache);
  CHECK(ex.raw_reply == "reply");
  CHECK(again.network_requests() == 0);
}

TEST_CASE("corrupt cache entries are misses") {
  const auto dir = fresh_dir("taxo_gateway_corrupt");
  auto mock = std::make_shared<MockProvider>(std::vector<MockEntry>{{"q", "reply"}});
  Gateway gw(mock, dir);
  const auto key = gw.complete("q").cache_key;
  std::ofstream(dir / (key + ".json")) << "{ not json";
  const auto ex = gw.complete("q");
  CHECK_FALSE(ex.from_cache);
  CHECK(gw.cache()->corrupt_entries_seen() == 1);
  CHECK(gw.complete("q").from_cache);
}

TEST_CASE("gateway is safe under concurrent callers") {
  const auto dir = fresh_dir("taxo_gateway_threads");
  auto mock = std::make_shared<MockProvider>(std::vector<MockEntry>{{"q", "reply"}});
  Gateway gw(mock, dir, {}, 2);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      if (gw.complete("q" + std::to_string(t % 4)).raw_reply == "reply") ++ok;
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok == 8);
  CHECK(gw.network_requests() <= 8);
}

TEST_CASE("separation fixtures") {
  const auto cases = nlohmann::json::parse(oracle::read_file(oracle::fixtures() / "parsers/separation.json"));
  CHECK(cases.size() >= 25);
  for (const auto& c : cases) {
    CAPTURE(c.at("name").get<std::string>());
    const auto terms = strings(c.at("terms"));
    const auto r = parse_separation(c.at("reply").get<std::string>(), terms);
    CHECK(normalized(r.unrelated) == normalized(strings(c.at("unrelated"))));
    CHECK(normalized(r.related) == normalized(strings(c.at("related"))));
    CHECK(r.unrelated.size() + r.related.size() == terms.size());
  }
}

TEST_CASE("separation without group markers is unparseable") {
  try {
    parse_separation("I cannot help with that.", {"a"});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnparseableSeparation);
  }
}

TEST_CASE("hierarchy fixtures") {
  const auto cases = nlohmann::json::parse(oracle::read_file(oracle::fixtures() / "parsers/hierarchy.json"));
  CHECK(cases.size() >= 15);
  for (const auto& c : cases) {
    CAPTURE(c.at("name").get<std::string>());
    const auto terms = strings(c.at("terms"));
    const auto r = parse_hierarchy(c.at("reply").get<std::string>(), terms);
    std::vector<std::string> top;
    for (const auto& b : r.branches) top.push_back(b.label);
    CHECK(top == strings(c.at("branches")));
    CHECK(normalized(r.unplaced) == normalized(strings(c.at("unplaced"))));
    const auto placed = r.placed_terms();
    const auto inputs = normalized(terms);
    for (const auto& p : placed) CHECK(inputs.count(text::normalize_label(p)) == 1);
    CHECK(normalized(placed).size() == placed.size());
    auto all = placed;
    all.insert(all.end(), r.unplaced.begin(), r.unplaced.end());
    CHECK(normalized(all) == inputs);
  }
}

TEST_CASE("hierarchy failures") {
  CHECK_THROWS_AS(parse_hierarchy("no json here", {"a"}), Error);
  try {
    parse_hierarchy(R"({"a": 3})", {"a"});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedStructure);
  }
}

TEST_CASE("parent parser picks the earliest candidate") {
  const std::vector<std::string> cands{"Carnes", "Pratos típicos", "pratos"};
  CHECK(parse_parent("The father of picanha is Carnes.", cands) == "Carnes");
  CHECK(parse_parent("Probably pratos tipicos, or carnes", cands) == "Pratos típicos");
  CHECK_FALSE(parse_parent("I am not sure.", cands).has_value());
}
