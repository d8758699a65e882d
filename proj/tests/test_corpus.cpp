#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "taxo/corpus.hpp"
#include "taxo/error.hpp"
#include "taxo/llm.hpp"

using namespace taxo;
using namespace taxo::corpus;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& contents) {
  const auto dir = fs::temp_directory_path() / "taxo_test_corpus";
  fs::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p, std::ios::binary) << contents;
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ConfigError;
}

const char* kHeader = "merchant_id,merchant_name,macro_category,micro_category,description,transaction_count\n";

}  // namespace

TEST_CASE("csv ingestion keeps file order and RFC-4180 quoting") {
  const auto p = write_temp("ok.csv", std::string(kHeader) +
                                          "m1,A,Food,Pizzeria,\"Pizza, massa \"\"fina\"\"\",10\n"
                                          "m2,B,Food,Pizzeria,,3\n"
                                          "m3,C,Shopping,Jewelry,\"linha1\nlinha2\",7\n");
  const auto rows = ingest_merchants(p, InputFormat::Csv);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].description == "Pizza, massa \"fina\"");
  CHECK_FALSE(rows[1].has_description());
  CHECK(rows[2].description == "linha1\nlinha2");
  CHECK(rows[2].transaction_count == 7);
}

TEST_CASE("jsonl ingestion and format detection") {
  const auto p = write_temp("ok.jsonl",
                            R"({"merchant_id":"j1","merchant_name":"X","macro_category":"Food","micro_category":"Pizzeria","description":"Pizza","transaction_count":4})"
                            "\n");
  CHECK(format_from_path(p) == InputFormat::Jsonl);
  CHECK(format_from_path("x.csv") == InputFormat::Csv);
  const auto rows = ingest_merchants(p, InputFormat::Jsonl);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].merchant_id == "j1");
}

TEST_CASE("ingestion errors") {
  const auto missing = write_temp("missing.csv", "merchant_id,macro_category\nm1,Food\n");
  CHECK(code_of([&] { ingest_merchants(missing, InputFormat::Csv); }) == ErrorCode::MissingField);
  const auto dup = write_temp("dup.csv", std::string(kHeader) + "m1,A,Food,P,x,1\nm1,B,Food,P,y,2\n");
  CHECK(code_of([&] { ingest_merchants(dup, InputFormat::Csv); }) == ErrorCode::DuplicateId);
  CHECK(code_of([&] { ingest_merchants("/nonexistent/file.csv", InputFormat::Csv); }) == ErrorCode::UnreadableFile);
}

TEST_CASE("per-macro cap keeps the busiest merchants in file order") {
  const auto p = write_temp("cap.csv", std::string(kHeader) +
                                           "a,A,Food,P,x,5\nb,B,Food,P,x,9\nc,C,Food,P,x,5\nd,D,Shop,S,x,1\n");
  const auto rows = ingest_merchants(p, InputFormat::Csv, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].merchant_id == "a");
  CHECK(rows[1].merchant_id == "b");
  CHECK(rows[2].merchant_id == "d");
}

TEST_CASE("tokenizer sentences and positions") {
  const auto toks = tokenize("Gourmet pizza. Wood fired pizza oven!\n\nWi-Fi, grátis");
  REQUIRE(toks.size() == 8);
  CHECK(toks[0].surface == "Gourmet");
  CHECK(toks[0].normalized == "gourmet");
  CHECK(toks[2].sentence_index == 1);
  CHECK(toks[2].position_in_sentence == 0);
  CHECK(toks[5].position_in_sentence == 3);
  CHECK(toks[6].normalized == "wi-fi");
  CHECK(toks[6].sentence_index == 2);
  // the comma leaves a gap
  CHECK(toks[7].position_in_sentence == toks[6].position_in_sentence + 2);
}

TEST_CASE("preprocess drops stop words, removed categories and filter words") {
  StopwordSet stop({"de", "a"});
  LexiconPosProvider lex;
  lex.add("oferece", Pos::VERB);
  lex.add("melhor", Pos::ADJ);
  GenericWordFilter filter;
  filter.insert("casa");
  const auto toks = tokenize("A casa oferece a melhor pizza de calabresa");
  const auto kept = preprocess(toks, stop, lex, &filter);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].normalized == "pizza");
  CHECK(kept[0].position_in_sentence == 5);
  CHECK(kept[1].normalized == "calabresa");
  CHECK(kept[1].pos == Pos::NOUN);
  CHECK(is_removed_category(Pos::VERB));
  CHECK_FALSE(is_removed_category(Pos::NOUN));
}

TEST_CASE("lexicon tie-breaking and loading") {
  LexiconPosProvider lex;
  lex.add("casa", Pos::VERB);
  lex.add("casa", Pos::NOUN);
  lex.add("casa", Pos::NOUN);
  CHECK(lex.tag(tokenize("casa")[0]) == Pos::NOUN);
  const auto loaded = LexiconPosProvider::load(oracle::data() / "pos_lexicon_pt.tsv");
  CHECK(loaded.size() > 0);
  CHECK(parse_pos("NOUN") == Pos::NOUN);
  CHECK_FALSE(parse_pos("NOPE").has_value());
  CHECK(to_string(Pos::ADJ) == "ADJ");
}

TEST_CASE("parallel and serial preprocessing agree") {
  const auto records = ingest_merchants(oracle::data() / "toy/merchants.csv", InputFormat::Csv);
  const auto stop = StopwordSet::load(oracle::data() / "stopwords_pt.txt");
  const auto lex = LexiconPosProvider::load(oracle::data() / "pos_lexicon_pt.tsv");
  PreprocessOptions opts{&stop, &lex, nullptr};
  const auto a = preprocess_records(records, opts);
  const auto b = preprocess_records_serial(records, opts);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].merchant_id == b[i].merchant_id);
    CHECK(a[i].tokens == b[i].tokens);
  }
  const auto groups = group_by_micro(records, a);
  CHECK(groups.size() == 5);
  CHECK(groups[0].micro_category == "Brazilian Cuisine");
  for (const auto& g : groups) CHECK_FALSE(g.empty());
}

TEST_CASE("generic filter round trip") {
  GenericWordFilter f;
  f.macro_category = "Food";
  f.insert("Qualidade");
  f.insert("atendimento");
  const auto p = fs::temp_directory_path() / "taxo_test_corpus" / "filter.txt";
  f.save(p);
  CHECK(oracle::read_file(p) == "atendimento\nqualidade\n");
  const auto g = GenericWordFilter::load(p, "Food");
  CHECK(g.words == f.words);
  CHECK(g.contains("QUALIDADE"));
}

TEST_CASE("generic filter collects group 1 of each micro category") {
  SubCorpus sc;
  sc.macro_category = "Food";
  sc.micro_category = "Pizzeria";
  Document d;
  d.tokens = tokenize("pizza loja");
  d.sentence_count = 1;
  sc.documents.push_back(d);
  auto mock = std::make_shared<llm::MockProvider>(
      std::vector<llm::MockEntry>{{"Pizzeria", "Group 1: loja\nGroup 2: pizza", 0}});
  llm::Gateway gw(mock);
  std::vector<FilterBuildLog> log;
  const auto f = build_generic_filter(
      "Food", {sc}, [](const SubCorpus&) { return std::vector<std::string>{"pizza", "loja"}; }, gw, &log);
  CHECK(f.words == std::set<std::string>{"loja"});
  REQUIRE(log.size() == 1);
  CHECK(log[0].candidate_count == 2);

  auto none = std::make_shared<llm::MockProvider>(
      std::vector<llm::MockEntry>{{"Pizzeria", "Group 1: none\nGroup 2: pizza, loja", 0}});
  llm::Gateway gw2(none);
  const auto empty = build_generic_filter(
      "Food", {sc}, [](const SubCorpus&) { return std::vector<std::string>{"pizza", "loja"}; }, gw2);
  CHECK(empty.words.empty());

  SubCorpus blank = sc;
  blank.documents.clear();
  CHECK(code_of([&] {
          build_generic_filter("Food", {blank}, [](const SubCorpus&) { return std::vector<std::string>{}; }, gw);
        }) == ErrorCode::EmptyCorpus);
}
