#include "taxo/tagger.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/text.hpp"

namespace taxo::tagger {

ReverseIndex build_reverse_index(const taxonomy::Taxonomy& taxonomy, bool leaves_only) {
  ReverseIndex index;
  index.taxonomy_topic = taxonomy.topic;
  for (const auto& node : taxonomy.nodes) {
    if (node.id == taxonomy.root_id) continue;
    if (leaves_only && !node.children.empty()) continue;
    const auto tokens = text::word_tokens(node.label);
    if (tokens.empty()) continue;
    const auto key = text::join(tokens, " ");
    if (!index.postings.emplace(key, node.id).second) {
      spdlog::debug("tagger: '{}' collides with an indexed label, skipped", node.label);
      continue;
    }
    index.labels.emplace(node.id, node.label);
    index.max_term_len = std::max(index.max_term_len, tokens.size());
  }
  return index;
}

TagAssignment tag_merchant(const corpus::MerchantRecord& record, const ReverseIndex& index) {
  if (text::normalize_label(record.micro_category) != text::normalize_label(index.taxonomy_topic)) {
    throw Error(ErrorCode::TopicMismatch,
                "merchant category '" + record.micro_category + "' vs index '" + index.taxonomy_topic + "'");
  }
  TagAssignment out;
  out.merchant_id = record.merchant_id;
  out.taxonomy_topic = index.taxonomy_topic;
  const auto tokens = corpus::tokenize(record.description);
  std::set<taxonomy::NodeId> seen;
  std::string key;
  for (std::size_t start = 0; start < tokens.size(); ++start) {
    key.clear();
    for (std::size_t len = 1; len <= index.max_term_len && start + len <= tokens.size(); ++len) {
      if (len > 1) key.push_back(' ');
      key += tokens[start + len - 1].normalized;
      auto it = index.postings.find(key);
      if (it == index.postings.end() || !seen.insert(it->second).second) continue;
      out.tags.push_back({it->second, index.labels.at(it->second), start});
    }
  }
  std::stable_sort(out.tags.begin(), out.tags.end(), [](const Tag& a, const Tag& b) {
    if (a.first_match_offset != b.first_match_offset) return a.first_match_offset < b.first_match_offset;
    return a.label < b.label;
  });
  return out;
}

std::size_t TaggingResult::skipped_total() const {
  std::size_t n = 0;
  for (const auto& [k, v] : skipped) n += v;
  return n;
}

namespace {

std::map<std::string, ReverseIndex> build_indexes(
    const std::map<std::string, taxonomy::Taxonomy>& taxonomies, bool leaves_only) {
  std::map<std::string, ReverseIndex> indexes;
  for (const auto& [topic, tax] : taxonomies) {
    indexes.emplace(text::normalize_label(topic), build_reverse_index(tax, leaves_only));
  }
  return indexes;
}

const ReverseIndex* index_for(const std::map<std::string, ReverseIndex>& indexes,
                              const corpus::MerchantRecord& rec) {
  auto it = indexes.find(text::normalize_label(rec.micro_category));
  return it == indexes.end() ? nullptr : &it->second;
}

TaggingResult collect(const std::vector<corpus::MerchantRecord>& records,
                      std::vector<std::optional<TagAssignment>>&& slots) {
  TaggingResult result;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (slots[i]) {
      result.assignments.push_back(std::move(*slots[i]));
    } else {
      ++result.skipped[records[i].micro_category];
    }
  }
  return result;
}

}  // namespace

TaggingResult tag_dataset(const std::vector<corpus::MerchantRecord>& records,
                          const std::map<std::string, taxonomy::Taxonomy>& taxonomies,
                          bool leaves_only) {
  const auto indexes = build_indexes(taxonomies, leaves_only);
  std::vector<std::optional<TagAssignment>> slots(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (const auto* index = index_for(indexes, records[idx])) slots[idx] = tag_merchant(records[idx], *index);
  }
  return collect(records, std::move(slots));
}

TaggingResult tag_dataset_serial(const std::vector<corpus::MerchantRecord>& records,
                                 const std::map<std::string, taxonomy::Taxonomy>& taxonomies,
                                 bool leaves_only) {
  const auto indexes = build_indexes(taxonomies, leaves_only);
  std::vector<std::optional<TagAssignment>> slots(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (const auto* index = index_for(indexes, records[i])) slots[i] = tag_merchant(records[i], *index);
  }
  return collect(records, std::move(slots));
}

void save_assignments(const std::filesystem::path& path, const std::vector<TagAssignment>& assignments) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, path.string());
  for (const auto& a : assignments) {
    nlohmann::ordered_json j;
    j["merchant_id"] = a.merchant_id;
    j["topic"] = a.taxonomy_topic;
    auto tags = nlohmann::ordered_json::array();
    for (const auto& t : a.tags) {
      nlohmann::ordered_json o;
      o["label"] = t.label;
      o["node_id"] = t.node_id;
      tags.push_back(std::move(o));
    }
    j["tags"] = std::move(tags);
    out << j.dump() << '\n';
  }
}

std::vector<TagAssignment> load_assignments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::vector<TagAssignment> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TagAssignment a;
      a.merchant_id = j.at("merchant_id").get<std::string>();
      a.taxonomy_topic = j.at("topic").get<std::string>();
      for (const auto& t : j.at("tags")) {
        a.tags.push_back({t.at("node_id").get<taxonomy::NodeId>(), t.at("label").get<std::string>(), 0});
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace taxo::tagger
