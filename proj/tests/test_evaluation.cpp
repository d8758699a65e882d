#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "taxo/error.hpp"
#include "taxo/evaluation.hpp"

using namespace taxo;
using namespace taxo::evaluation;

namespace {

std::vector<taxonomy::Taxonomy> fixture_taxonomies() {
  return {taxonomy::Taxonomy::load(oracle::fixtures() / "taxonomy/brazilian_cuisine.json"),
          taxonomy::Taxonomy::load(oracle::fixtures() / "taxonomy/clothing_and_accessories.json")};
}

std::vector<tagger::TagAssignment> fixture_tags() {
  return tagger::load_assignments(oracle::fixtures() / "evaluation/merchant_tags.jsonl");
}

double percent(double x) { return std::round(x * 10000.0) / 100.0; }

/// Independent recount: (evaluators x items - marks) / (evaluators x items)
/// straight from the JSON lines.
double recount(const std::string& file, const std::string& subject_id, std::size_t items) {
  std::ifstream in(oracle::fixtures() / "evaluation" / file);
  std::set<std::string> evaluators;
  std::size_t marks = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["subject_id"] != subject_id) continue;
    evaluators.insert(j["evaluator_id"].get<std::string>());
    marks += j["marked_irrelevant"].size();
  }
  const double total = static_cast<double>(evaluators.size() * items);
  return (total - static_cast<double>(marks)) / total;
}

}  // namespace

TEST_CASE("merchant-level fixture reproduces the calibrated cells") {
  const auto tags = fixture_tags();
  const auto judgments = load_judgments(oracle::fixtures() / "evaluation/merchant_judgments.jsonl",
                                        make_lookup({}, tags));
  const auto food = merchant_coherence_report(tags[0], judgments);
  CHECK(food.n_items == 10);
  CHECK(food.per_evaluator.size() == 61);
  CHECK(food.total_marked == 47);
  CHECK(percent(food.mean_coherence) == 92.30);
  const auto shop = merchant_coherence_report(tags[1], judgments);
  CHECK(shop.n_items == 8);
  CHECK(shop.per_evaluator.size() == 95);
  CHECK(shop.total_marked == 22);
  CHECK(percent(shop.mean_coherence) == 97.11);
  CHECK(food.mean_coherence == doctest::Approx(recount("merchant_judgments.jsonl", "food_m1", 10)));
}

TEST_CASE("taxonomy-level fixture means stay above 0.90") {
  const auto taxes = fixture_taxonomies();
  const auto judgments = load_judgments(oracle::fixtures() / "evaluation/topic_judgments.jsonl",
                                        make_lookup(taxes, {}));
  for (const auto& t : taxes) {
    CAPTURE(t.topic);
    const auto r = topic_coherence_report(t, judgments);
    CHECK(r.per_evaluator.size() == 12);
    CHECK(r.n_items == t.size() - 1);
    CHECK(r.mean_coherence >= 0.90);
    CHECK(r.mean_coherence == doctest::Approx(recount("topic_judgments.jsonl", t.topic, t.size() - 1)));
  }
}

TEST_CASE("coherence arithmetic by hand") {
  std::vector<JudgmentSet> j{
      {"a", Subject::MerchantTags, "m", {"x"}},
      {"b", Subject::MerchantTags, "m", {}},
      {"a", Subject::MerchantTags, "m", {"y", "zzz"}},
      {"c", Subject::TaxonomyTerms, "m", {"x", "y"}},
  };
  const auto r = coherence_report("m", {"x", "y", "w", "v"}, Subject::MerchantTags, j);
  REQUIRE(r.per_evaluator.size() == 2);
  CHECK(r.per_evaluator[0].second == 0.5);
  CHECK(r.per_evaluator[1].second == 1.0);
  CHECK(r.mean_coherence == 0.75);
  CHECK(r.total_marked == 2);
  CHECK_THROWS_AS(coherence_report("other", {"x"}, Subject::MerchantTags, j), Error);
}

TEST_CASE("mean is invariant to evaluator order") {
  std::vector<JudgmentSet> j;
  for (int e = 0; e < 7; ++e) {
    JudgmentSet s{"e" + std::to_string(e), Subject::MerchantTags, "m", {}};
    if (e % 3 == 0) s.marked_irrelevant.insert("a");
    j.push_back(s);
  }
  const auto fwd = coherence_report("m", {"a", "b", "c"}, Subject::MerchantTags, j);
  std::reverse(j.begin(), j.end());
  const auto rev = coherence_report("m", {"a", "b", "c"}, Subject::MerchantTags, j);
  CHECK(fwd.mean_coherence == rev.mean_coherence);
}

TEST_CASE("judgment parsing errors carry line numbers") {
  const auto lookup = make_lookup(fixture_taxonomies(), {});
  try {
    parse_judgments("{\"evaluator_id\":\"a\",\"subject\":\"taxonomy_terms\",\"subject_id\":\"Brazilian Cuisine\",\"marked_irrelevant\":[\"pizza\"]}\n",
                    lookup);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownLabel);
  }
  try {
    parse_judgments("\n{oops\n", lookup);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedLine);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_judgments(R"({"evaluator_id":"a","subject":"nope","subject_id":"x","marked_irrelevant":[]})", lookup),
                  Error);
  const auto ok = parse_judgments(
      R"({"evaluator_id":"a","subject":"taxonomy_terms","subject_id":"Brazilian Cuisine","marked_irrelevant":["Feijoada"]})");
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].marked_irrelevant == std::set<std::string>{"feijoada"});
}

TEST_CASE("empty subjects are rejected") {
  tagger::TagAssignment none{"m0", "Pizzeria", {}};
  CHECK_THROWS_AS(merchant_coherence_report(none, {}), Error);
  CHECK_THROWS_AS(topic_coherence_report(taxonomy::Taxonomy::with_root("x"), {}), Error);
}

TEST_CASE("top merchants by transaction count") {
  std::vector<corpus::MerchantRecord> rs(4);
  const char* ids[] = {"d", "b", "a", "c"};
  const std::uint64_t tx[] = {5, 9, 5, 1};
  for (int i = 0; i < 4; ++i) {
    rs[i].merchant_id = ids[i];
    rs[i].micro_category = "P";
    rs[i].transaction_count = tx[i];
  }
  const auto top = top_merchants(rs, "P", 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].merchant_id == "b");
  CHECK(top[1].merchant_id == "a");
  CHECK(top[2].merchant_id == "d");
  CHECK(parse_subject("merchant_tags") == Subject::MerchantTags);
  CHECK(to_string(Subject::TaxonomyTerms) == "taxonomy_terms");
}

TEST_CASE("report json") {
  const auto r = coherence_report("m", {"x"}, Subject::MerchantTags, {{"a", Subject::MerchantTags, "m", {}}});
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["mean_coherence"] == 1.0);
  CHECK(j["subject_id"] == "m");
}
