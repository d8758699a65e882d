#include "doctest.h"
#include "oracles.hpp"
#include "taxo/hash.hpp"
#include "taxo/text.hpp"

using namespace taxo::text;

TEST_CASE("normalize folds case and diacritics") {
  CHECK(normalize("Calça") == "calca");
  CHECK(normalize("AÇAÍ São João") == "acai sao joao");
  CHECK(normalize("Ñandú") == "nandu");
  // decomposed input: e + combining acute
  CHECK(normalize("caf\x65\xcc\x81") == "cafe");
}

TEST_CASE("normalize is idempotent") {
  for (const char* s : {"Pão de Queijo", "ÉÈÊË", "ÀÁÂÃÄÅ", "x-Burguer", "Ørsted", "ŒUVRE"}) {
    const auto once = normalize(s);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("invalid utf-8 decodes byte by byte to replacement characters") {
  const auto d = decode_utf8("a\xff" "b");
  REQUIRE(d.size() == 3);
  CHECK(d[1] == U'�');
  CHECK(encode_utf8(decode_utf8("mañana")) == "mañana");
}

TEST_CASE("levenshtein matches the oracle dynamic program") {
  const char* words[] = {"pizza", "pizzas", "pizzaria", "calça", "calca", "", "massa", "sushi"};
  for (const char* a : words) {
    for (const char* b : words) {
      CHECK(levenshtein(decode_utf8(a), decode_utf8(b)) == oracle::edit_distance(decode_utf8(a), decode_utf8(b)));
    }
  }
  CHECK(levenshtein_similarity("pizzas", "pizza") == doctest::Approx(5.0 / 6.0));
  CHECK(levenshtein_similarity("", "") == 1.0);
}

TEST_CASE("labels and word tokens") {
  CHECK(normalize_label("  Calça   Jeans ") == "calca jeans");
  CHECK(word_tokens("-Wi-Fi- grátis!") == std::vector<std::string>{"wi-fi", "gratis"});
  CHECK(slug("Clothing and Accessories") == "clothing_and_accessories");
  CHECK(slug("Açaí & Co.") == "acai_co");
  CHECK(join({"a", "b"}, ", ") == "a, b");
  CHECK(trim("  x \n") == "x");
}

TEST_CASE("sha256 known vectors") {
  CHECK(taxo::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(taxo::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
