#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "taxo/corpus.hpp"
#include "taxo/keywords.hpp"
#include "taxo/lda.hpp"
#include "taxo/llm.hpp"

namespace taxo::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  // [data]
  fs::path merchants;
  std::size_t max_merchants_per_macro = 50000;
  fs::path stopwords;
  fs::path pos_lexicon;
  // [filter]
  bool use_filter = true;
  // [keywords]
  keywords::KeywordOptions keywords;
  // [lda]
  std::size_t min_bigram_count = 20;
  std::uint32_t k_min = 1;
  std::uint32_t k_max = 5;
  lda::GibbsOptions gibbs;
  std::size_t coherence_top_n = 10;
  std::size_t topic_raw_top = 20;
  double topic_keep_fraction = 0.6;
  // [llm]
  fs::path cache_dir = "cache";
  fs::path mock_script;
  int retries = 3;
  int timeout_ms = 60000;
  int backoff_ms = 1000;
  std::size_t max_in_flight = 4;
  // [tagging]
  bool leaves_only = false;
  // [expansion]
  double hidden_fraction = 0.2;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool include_internal = false;
  std::vector<fs::path> semeval;
  bool oracle = false;
  // [evaluation]
  fs::path judgments;
  // [run]
  std::uint64_t seed = 42;
  fs::path output_dir = "out";
  bool force = false;
};

/// INI file with sections data, filter, keywords, lda, llm, tagging,
/// expansion, evaluation and run. Relative paths resolve against the file's
/// directory. Unknown keys are a ConfigError.
PipelineConfig load_config(const fs::path& path);

struct StageReport {
  std::string stage;
  bool up_to_date = false;
  std::vector<std::string> lines;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Mock script provider when one is configured, otherwise the HTTP provider
/// from the environment (ConfigError when neither is available).
std::shared_ptr<llm::Provider> make_provider(const PipelineConfig& config);

/// Keywords followed by LDA topic terms, deduplicated by normalized label.
std::vector<std::string> candidate_terms(const corpus::SubCorpus& subcorpus, const PipelineConfig& config);

StageReport build_filter(const PipelineConfig& config);
StageReport build_taxonomies(const PipelineConfig& config);
StageReport tag(const PipelineConfig& config);
StageReport expand_eval(const PipelineConfig& config);
StageReport coherence(const PipelineConfig& config);
StageReport load_semeval(const PipelineConfig& config);

}  // namespace taxo::pipeline
