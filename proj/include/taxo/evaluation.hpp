#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "taxo/corpus.hpp"
#include "taxo/tagger.hpp"
#include "taxo/taxonomy.hpp"

namespace taxo::evaluation {

enum class Subject { TaxonomyTerms, MerchantTags };

std::string_view to_string(Subject subject);
std::optional<Subject> parse_subject(std::string_view s);

struct JudgmentSet {
  std::string evaluator_id;
  Subject subject = Subject::TaxonomyTerms;
  std::string subject_id;
  /// Normalized labels.
  std::set<std::string> marked_irrelevant;
};

/// Normalized label set of a subject, or nullopt when the subject is unknown.
using LabelLookup =
    std::function<std::optional<std::set<std::string>>(Subject subject, const std::string& subject_id)>;

/// Lookup over taxonomies (by topic) and tag assignments (by merchant id).
LabelLookup make_lookup(const std::vector<taxonomy::Taxonomy>& taxonomies,
                        const std::vector<tagger::TagAssignment>& assignments);

/// JSONL: {evaluator_id, subject, subject_id, marked_irrelevant: [..]}.
/// Without a lookup no label validation happens.
std::vector<JudgmentSet> load_judgments(const std::filesystem::path& path, const LabelLookup& lookup = {});
std::vector<JudgmentSet> parse_judgments(std::string_view contents, const LabelLookup& lookup = {},
                                         const std::string& source = "<memory>");

struct CoherenceReport {
  std::string subject_id;
  std::vector<std::pair<std::string, double>> per_evaluator;
  double mean_coherence = 0.0;
  std::size_t n_items = 0;
  /// Sum over evaluators of items marked irrelevant.
  std::size_t total_marked = 0;
};

/// Items are the non-root node labels. Sets for the same evaluator are merged.
CoherenceReport topic_coherence_report(const taxonomy::Taxonomy& taxonomy,
                                       const std::vector<JudgmentSet>& judgments);
CoherenceReport merchant_coherence_report(const tagger::TagAssignment& assignment,
                                          const std::vector<JudgmentSet>& judgments);

/// Coherence over explicit item labels; the arithmetic behind both reports.
CoherenceReport coherence_report(const std::string& subject_id, const std::vector<std::string>& items,
                                 Subject subject, const std::vector<JudgmentSet>& judgments);

/// Up to `n` merchants of a micro category, most transactions first, ties by id.
std::vector<corpus::MerchantRecord> top_merchants(const std::vector<corpus::MerchantRecord>& records,
                                                  const std::string& micro_category, std::size_t n = 5);

std::string to_json(const CoherenceReport& report);

}  // namespace taxo::evaluation
