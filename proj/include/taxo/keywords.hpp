#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "taxo/corpus.hpp"

namespace taxo::keywords {

/// Per-term features over a sub-corpus read as one virtual document.
struct TermStatistics {
  std::string term;
  std::size_t tf = 0;
  /// Capitalized occurrences not at the start of a sentence (acronyms excluded).
  std::size_t tf_upper = 0;
  /// All-uppercase occurrences with at least two letters.
  std::size_t tf_acronym = 0;
  std::size_t sentence_frequency = 0;
  double median_sentence_index = 0.0;
  std::size_t left_distinct = 0;
  std::size_t left_total = 0;
  std::size_t right_distinct = 0;
  std::size_t right_total = 0;

  bool operator==(const TermStatistics&) const = default;
};

struct CorpusAggregates {
  double mean_tf = 0.0;
  /// Population standard deviation.
  double std_tf = 0.0;
  double max_tf = 0.0;
  double n_sentences = 0.0;

  bool operator==(const CorpusAggregates&) const = default;
};

struct Statistics {
  std::map<std::string, TermStatistics> terms;
  CorpusAggregates aggregates;
};

/// Documents are concatenated with global sentence numbering; neighbors are
/// retained tokens within `cooccur_window` original positions in the same
/// sentence. OpenMP-parallel over documents with an ordered merge.
Statistics collect_statistics(const corpus::SubCorpus& subcorpus, std::size_t cooccur_window = 1);
/// Serial reference for collect_statistics.
Statistics collect_statistics_serial(const corpus::SubCorpus& subcorpus,
                                     std::size_t cooccur_window = 1);

/// Lower is more relevant.
double score_unigram(const TermStatistics& stats, const CorpusAggregates& aggregates);

struct CandidateTerm {
  std::string surface;
  double score = 0.0;
  std::size_t tf = 0;
};

struct KeywordOptions {
  std::size_t max_ngram = 3;
  std::size_t top_k = 30;
  double dedup_threshold = 0.8;
  std::size_t cooccur_window = 1;
};

/// Candidates are runs of up to max_ngram retained tokens at consecutive
/// positions of one sentence, scored prod(S) / (tf * (1 + sum(S))). Sorted by
/// score, then higher tf, then surface; near-duplicates of a better candidate
/// (normalized Levenshtein similarity >= dedup_threshold) are skipped.
std::vector<CandidateTerm> extract_keywords(const corpus::SubCorpus& subcorpus,
                                            const KeywordOptions& options = {});

/// JSON array of {surface, score, tf}.
void save_keywords(const std::filesystem::path& path, const std::vector<CandidateTerm>& keywords);
std::vector<CandidateTerm> load_keywords(const std::filesystem::path& path);

}  // namespace taxo::keywords
