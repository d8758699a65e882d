#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "taxo/llm.hpp"
#include "taxo/taxonomy.hpp"

namespace taxo::expansion {

struct HiddenTerm {
  std::string term;
  std::string true_parent;
};

struct Prediction {
  std::string term;
  /// nullopt is an abstention.
  std::optional<std::string> predicted_parent;
  std::string raw_reply;
  /// Set when the request failed and the term was recorded as abstained.
  std::string error;
};

struct ExpansionTrial {
  std::string taxonomy_id;
  std::uint64_t seed = 0;
  double hidden_fraction = 0.2;
  std::vector<HiddenTerm> hidden;
  std::string context_prompt;
  /// Labels of the taxonomy left after hiding; the answer space for parents.
  std::vector<std::string> candidates;
  std::vector<Prediction> predictions;
};

struct TrialOptions {
  double hidden_fraction = 0.2;
  /// Also hide internal nodes; their children move up to the nearest kept ancestor.
  bool include_internal = false;
};

/// Samples round(fraction x pool) nodes with Xoshiro256(seed) through a partial
/// Fisher-Yates shuffle of the pool (leaves in id order). Throws TooFewLeaves
/// under 5 leaves and InvalidArgument for a fraction outside (0, 1).
ExpansionTrial make_trial(const taxonomy::Taxonomy& taxonomy, std::uint64_t seed,
                          const TrialOptions& options = {});

/// Number of nodes make_trial hides from a pool of `pool` nodes.
std::size_t hidden_count(std::size_t pool, double fraction);

/// One request per hidden term: context, newline, parent question. A failed
/// request records an abstention with the error.
ExpansionTrial run_trial(ExpansionTrial trial, llm::Gateway& gateway);

struct ExpansionScore {
  std::size_t answered = 0;
  std::size_t correct = 0;
  std::size_t total_hidden = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// True when nothing was answered; precision is then reported as 0.
  bool precision_undefined = false;
};

/// Correct means the normalized prediction equals the normalized true parent.
/// Abstentions lower recall only. Throws NoPredictions.
ExpansionScore score_trial(const ExpansionTrial& trial);

struct NamedTaxonomy {
  std::string id;
  taxonomy::Taxonomy taxonomy;
};

struct BenchmarkCell {
  std::string provider_id;
  std::string taxonomy_id;
  std::vector<ExpansionTrial> trials;
  std::vector<ExpansionScore> scores;
  /// Mean F1 over seeds; nullopt when a trial failed.
  std::optional<double> mean_f1;
  std::string error;
};

struct BenchmarkResult {
  std::vector<std::string> providers;
  std::vector<std::string> taxonomies;
  /// Row-major: provider, then taxonomy.
  std::vector<BenchmarkCell> cells;

  const BenchmarkCell& cell(std::size_t provider, std::size_t taxonomy) const;
};

inline constexpr std::string_view kAbstentionPolicy =
    "precision = correct/answered, recall = correct/total_hidden; abstentions count against recall only";

/// Every (provider, taxonomy, seed) trial. Cells run in parallel.
BenchmarkResult benchmark(const std::vector<NamedTaxonomy>& taxonomies,
                          const std::vector<llm::Gateway*>& gateways, const std::vector<std::uint64_t>& seeds,
                          const TrialOptions& options = {});

/// Rows are providers, columns taxonomies, cells mean F1 to 4 decimals ("NA" on error).
std::string to_csv(const BenchmarkResult& result);
/// Full per-term log with the abstention policy.
std::string to_json(const BenchmarkResult& result);

/// Mock entries answering every "Who is the father of <term>?" with the term's
/// parent label.
std::vector<llm::MockEntry> oracle_entries(const taxonomy::Taxonomy& taxonomy);

}  // namespace taxo::expansion
