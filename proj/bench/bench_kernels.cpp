// Serial reference vs OpenMP kernel on the toy corpus replicated to a few
// thousand merchants. Set OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <map>

#include "taxo/corpus.hpp"
#include "taxo/keywords.hpp"
#include "taxo/lda.hpp"
#include "taxo/tagger.hpp"
#include "taxo/taxonomy.hpp"

using namespace taxo;

namespace {

struct Workload {
  std::vector<corpus::MerchantRecord> records;
  corpus::StopwordSet stopwords;
  corpus::LexiconPosProvider pos;
  std::vector<corpus::SubCorpus> subcorpora;
  std::map<std::string, taxonomy::Taxonomy> taxonomies;
  lda::EncodedCorpus encoded;

  corpus::PreprocessOptions options() const { return {&stopwords, &pos, nullptr}; }
};

const Workload& workload() {
  static const Workload w = [] {
    Workload w;
    const auto base = corpus::ingest_merchants(std::string(TAXO_DATA) + "/toy/merchants.csv", corpus::InputFormat::Csv);
    for (int copy = 0; copy < 40; ++copy) {
      for (auto r : base) {
        r.merchant_id += "_" + std::to_string(copy);
        w.records.push_back(std::move(r));
      }
    }
    w.stopwords = corpus::StopwordSet::load(std::string(TAXO_DATA) + "/stopwords_pt.txt");
    w.pos = corpus::LexiconPosProvider::load(std::string(TAXO_DATA) + "/pos_lexicon_pt.tsv");
    w.subcorpora = corpus::build_subcorpora(w.records, w.options());
    for (const char* name : {"brazilian_cuisine", "pizzeria", "japanese_cuisine", "clothing_and_accessories", "jewelry"}) {
      auto t = taxonomy::Taxonomy::load(std::string(TAXO_FIXTURES) + "/taxonomy/" + name + ".json");
      w.taxonomies.emplace(t.topic, std::move(t));
    }
    w.encoded = lda::build_dictionary(w.subcorpora.front(), 20);
    return w;
  }();
  return w;
}

void BM_Preprocess(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    auto docs = state.range(0) ? corpus::preprocess_records(w.records, w.options())
                               : corpus::preprocess_records_serial(w.records, w.options());
    benchmark::DoNotOptimize(docs);
  }
}

void BM_Statistics(benchmark::State& state) {
  const auto& sc = workload().subcorpora.front();
  for (auto _ : state) {
    auto s = state.range(0) ? keywords::collect_statistics(sc) : keywords::collect_statistics_serial(sc);
    benchmark::DoNotOptimize(s);
  }
}

void BM_Tagging(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    auto r = state.range(0) ? tagger::tag_dataset(w.records, w.taxonomies)
                            : tagger::tag_dataset_serial(w.records, w.taxonomies);
    benchmark::DoNotOptimize(r);
  }
}

void BM_SelectTopicCount(benchmark::State& state) {
  const auto& e = workload().encoded;
  lda::GibbsOptions o;
  o.sweeps = 100;
  for (auto _ : state) {
    auto s = state.range(0)
                 ? lda::select_topic_count(e.docs, e.dictionary.entries, {1, 2, 3, 4, 5}, 42, o)
                 : lda::select_topic_count_serial(e.docs, e.dictionary.entries, {1, 2, 3, 4, 5}, 42, o);
    benchmark::DoNotOptimize(s);
  }
}

}  // namespace

// Argument 0 runs the serial reference, 1 the parallel kernel.
BENCHMARK(BM_Preprocess)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Statistics)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tagging)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SelectTopicCount)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
