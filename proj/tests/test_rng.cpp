#include <json.hpp>

#include <set>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "taxo/rng.hpp"

TEST_CASE("splitmix64 reference output") {
  taxo::SplitMix64 sm(0);
  CHECK(sm.next() == 0xe220a8397b1dcdafULL);
}

TEST_CASE("xoshiro256** matches the frozen generator vectors") {
  const auto j = nlohmann::json::parse(oracle::read_file(oracle::fixtures() / "expansion/sampling_expected.json"));
  for (const auto& v : j.at("generator_vectors")) {
    taxo::Xoshiro256 rng(v.at("seed").get<std::uint64_t>());
    for (const auto& x : v.at("next")) CHECK(rng.next() == std::stoull(x.get<std::string>()));
    for (const auto& x : v.at("below_1000")) CHECK(rng.below(1000) == x.get<std::uint64_t>());
  }
}

TEST_CASE("uniform01 stays in [0, 1)") {
  taxo::Xoshiro256 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("sample_without_replacement gives distinct in-range indices") {
  taxo::Xoshiro256 rng(5);
  const auto s = taxo::sample_without_replacement(50, 20, rng);
  CHECK(s.size() == 20);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 20);
  for (auto i : s) CHECK(i < 50);
  taxo::Xoshiro256 all(5);
  CHECK(taxo::sample_without_replacement(7, 7, all).size() == 7);
}
