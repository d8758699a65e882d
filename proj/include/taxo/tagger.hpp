#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "taxo/corpus.hpp"
#include "taxo/taxonomy.hpp"

namespace taxo::tagger {

struct ReverseIndex {
  std::string taxonomy_topic;
  std::size_t max_term_len = 0;
  /// Space-joined normalized token sequence -> node.
  std::map<std::string, taxonomy::NodeId> postings;
  std::map<taxonomy::NodeId, std::string> labels;
};

/// Indexes every non-root node (only leaves when `leaves_only`). Labels that
/// normalize to an already-indexed key keep the first node.
ReverseIndex build_reverse_index(const taxonomy::Taxonomy& taxonomy, bool leaves_only = false);

struct Tag {
  taxonomy::NodeId node_id = 0;
  std::string label;
  std::size_t first_match_offset = 0;

  bool operator==(const Tag&) const = default;
};

struct TagAssignment {
  std::string merchant_id;
  std::string taxonomy_topic;
  std::vector<Tag> tags;

  bool operator==(const TagAssignment&) const = default;
};

/// Matches index keys against every window of 1..max_term_len tokens of the
/// unfiltered description. Tags are unique per node, ordered by first offset
/// then label. Throws TopicMismatch when the record's micro category is not
/// the index topic.
TagAssignment tag_merchant(const corpus::MerchantRecord& record, const ReverseIndex& index);

struct TaggingResult {
  std::vector<TagAssignment> assignments;
  /// micro category -> number of merchants skipped for lack of a taxonomy
  std::map<std::string, std::size_t> skipped;
  std::size_t skipped_total() const;
};

/// Taxonomies keyed by topic. OpenMP-parallel over records; assignments keep
/// input order.
TaggingResult tag_dataset(const std::vector<corpus::MerchantRecord>& records,
                          const std::map<std::string, taxonomy::Taxonomy>& taxonomies,
                          bool leaves_only = false);
/// Serial reference for tag_dataset.
TaggingResult tag_dataset_serial(const std::vector<corpus::MerchantRecord>& records,
                                 const std::map<std::string, taxonomy::Taxonomy>& taxonomies,
                                 bool leaves_only = false);

/// One JSON object per line: {merchant_id, topic, tags: [{label, node_id}]}.
void save_assignments(const std::filesystem::path& path, const std::vector<TagAssignment>& assignments);
std::vector<TagAssignment> load_assignments(const std::filesystem::path& path);

}  // namespace taxo::tagger
