#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "taxo/corpus.hpp"

namespace taxo::lda {

struct Dictionary {
  std::vector<std::string> entries;
  std::unordered_map<std::string, std::uint32_t> index;

  std::uint32_t size() const { return static_cast<std::uint32_t>(entries.size()); }
  std::uint32_t intern(const std::string& token);
};

using EncodedDoc = std::vector<std::uint32_t>;

struct EncodedCorpus {
  Dictionary dictionary;
  std::vector<EncodedDoc> docs;
  /// Index into SubCorpus::documents for each encoded doc; documents left
  /// empty by preprocessing are omitted.
  std::vector<std::size_t> source_document;
};

/// Unigrams plus underscore-joined bigrams of tokens at consecutive positions
/// in one sentence occurring at least `min_bigram_count` times. A qualifying
/// bigram is emitted right after its first unigram, in addition to it.
EncodedCorpus build_dictionary(const corpus::SubCorpus& subcorpus, std::size_t min_bigram_count = 20);

struct LdaModel {
  std::uint32_t k = 0;
  std::vector<double> alpha;
  double beta = 0.01;
  std::uint64_t seed = 0;
  std::vector<std::string> vocabulary;
  /// k x V
  std::vector<std::vector<std::uint32_t>> topic_word_counts;
  /// D x k; empty for a model loaded from disk.
  std::vector<std::vector<std::uint32_t>> doc_topic_counts;
  std::vector<std::uint64_t> topic_totals;

  std::uint32_t vocab_size() const { return static_cast<std::uint32_t>(vocabulary.size()); }
  /// Smoothed topic-word probability (n_kw + beta) / (n_k + V beta).
  double phi(std::uint32_t topic, std::uint32_t word) const;
  /// Topic with the largest count in document d (lowest id on ties).
  std::uint32_t dominant_topic(std::size_t doc) const;

  void save(const std::filesystem::path& path) const;
  static LdaModel load(const std::filesystem::path& path);
};

struct GibbsOptions {
  int sweeps = 500;
  int burn_in = 50;
  int hyper_update_every = 10;
  double beta = 0.01;
  double alpha_init = 0.1;
  /// Inner fixed-point iterations per hyperparameter update.
  int minka_iterations = 5;
};

using SweepObserver = std::function<void(const LdaModel&, int sweep)>;

LdaModel gibbs_train(const std::vector<EncodedDoc>& docs, const std::vector<std::string>& vocabulary,
                     std::uint32_t k, std::uint64_t seed, const GibbsOptions& options = {},
                     const SweepObserver& observer = {});

/// Minka's fixed-point update of the Dirichlet document-topic prior, applied
/// `iterations` times; components are floored at 1e-8.
std::vector<double> minka_update(const std::vector<std::vector<std::uint32_t>>& doc_topic_counts,
                                 std::vector<double> alpha, int iterations);

struct Coherence {
  std::vector<double> per_topic;
  double mean = 0.0;
};

/// Words of a topic with a positive count, by phi descending (lower id on
/// ties), truncated to top_n.
std::vector<std::uint32_t> top_words(const LdaModel& model, std::uint32_t topic, std::size_t top_n);

/// UMass: for each pair of top words, ln((D(lower, higher) + 1) / D(higher)),
/// where `higher` is the better-ranked word and D counts documents.
Coherence umass_coherence(const LdaModel& model, const std::vector<EncodedDoc>& docs,
                          std::size_t top_n = 10);

struct Selection {
  LdaModel model;
  std::vector<std::uint32_t> ks;
  std::vector<double> mean_coherence;
};

/// Trains one model per k with seed + k and keeps the highest mean UMass
/// coherence (smallest k on ties). Values of k train in parallel.
Selection select_topic_count(const std::vector<EncodedDoc>& docs,
                             const std::vector<std::string>& vocabulary,
                             const std::vector<std::uint32_t>& k_range, std::uint64_t seed,
                             const GibbsOptions& options = {}, std::size_t coherence_top_n = 10);
/// Serial reference for select_topic_count.
Selection select_topic_count_serial(const std::vector<EncodedDoc>& docs,
                                    const std::vector<std::string>& vocabulary,
                                    const std::vector<std::uint32_t>& k_range, std::uint64_t seed,
                                    const GibbsOptions& options = {},
                                    std::size_t coherence_top_n = 10);

struct TopicTermList {
  std::uint32_t topic_id = 0;
  std::vector<std::pair<std::string, double>> terms;
};

/// Per topic: the raw_top words by phi, of which the first
/// ceil(keep_fraction * count) are kept. Bigram underscores become spaces.
std::vector<TopicTermList> topic_terms(const LdaModel& model, std::size_t raw_top = 20,
                                       double keep_fraction = 0.6);

}  // namespace taxo::lda
