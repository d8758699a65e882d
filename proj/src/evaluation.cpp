#include "taxo/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/text.hpp"

namespace taxo::evaluation {

std::string_view to_string(Subject subject) {
  return subject == Subject::TaxonomyTerms ? "taxonomy_terms" : "merchant_tags";
}

std::optional<Subject> parse_subject(std::string_view s) {
  if (s == "taxonomy_terms") return Subject::TaxonomyTerms;
  if (s == "merchant_tags") return Subject::MerchantTags;
  return std::nullopt;
}

LabelLookup make_lookup(const std::vector<taxonomy::Taxonomy>& taxonomies,
                        const std::vector<tagger::TagAssignment>& assignments) {
  std::map<std::string, std::set<std::string>> topics;
  for (const auto& tax : taxonomies) {
    auto& labels = topics[text::normalize_label(tax.topic)];
    for (const auto& node : tax.nodes) {
      if (node.id != tax.root_id) labels.insert(node.normalized_label);
    }
  }
  std::map<std::string, std::set<std::string>> merchants;
  for (const auto& a : assignments) {
    auto& labels = merchants[a.merchant_id];
    for (const auto& t : a.tags) labels.insert(text::normalize_label(t.label));
  }
  return [topics = std::move(topics), merchants = std::move(merchants)](
             Subject subject, const std::string& id) -> std::optional<std::set<std::string>> {
    if (subject == Subject::TaxonomyTerms) {
      auto it = topics.find(text::normalize_label(id));
      if (it != topics.end()) return it->second;
    } else {
      auto it = merchants.find(id);
      if (it != merchants.end()) return it->second;
    }
    return std::nullopt;
  };
}

std::vector<JudgmentSet> parse_judgments(std::string_view contents, const LabelLookup& lookup,
                                         const std::string& source) {
  std::vector<JudgmentSet> out;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto where = source + ":" + std::to_string(lineno);
    JudgmentSet set;
    std::vector<std::string> raw_marks;
    try {
      const auto j = nlohmann::json::parse(line);
      set.evaluator_id = j.at("evaluator_id").get<std::string>();
      const auto subject = parse_subject(j.at("subject").get<std::string>());
      if (!subject) throw Error(ErrorCode::MalformedLine, where + ": unknown subject");
      set.subject = *subject;
      set.subject_id = j.at("subject_id").get<std::string>();
      raw_marks = j.at("marked_irrelevant").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, where + ": " + e.what());
    }
    std::optional<std::set<std::string>> known;
    if (lookup) {
      known = lookup(set.subject, set.subject_id);
      if (!known) throw Error(ErrorCode::UnknownLabel, where + ": unknown subject '" + set.subject_id + "'");
    }
    for (const auto& mark : raw_marks) {
      auto norm = text::normalize_label(mark);
      if (known && !known->contains(norm)) {
        throw Error(ErrorCode::UnknownLabel, where + ": '" + mark + "'");
      }
      set.marked_irrelevant.insert(std::move(norm));
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<JudgmentSet> load_judgments(const std::filesystem::path& path, const LabelLookup& lookup) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_judgments(ss.str(), lookup, path.string());
}

CoherenceReport coherence_report(const std::string& subject_id, const std::vector<std::string>& items,
                                 Subject subject, const std::vector<JudgmentSet>& judgments) {
  std::set<std::string> item_set;
  for (const auto& item : items) item_set.insert(text::normalize_label(item));

  const auto wanted = subject == Subject::TaxonomyTerms ? text::normalize_label(subject_id) : subject_id;
  std::vector<std::string> order;
  std::map<std::string, std::set<std::string>> marks;
  for (const auto& j : judgments) {
    if (j.subject != subject) continue;
    const auto id = subject == Subject::TaxonomyTerms ? text::normalize_label(j.subject_id) : j.subject_id;
    if (id != wanted) continue;
    auto [it, fresh] = marks.try_emplace(j.evaluator_id);
    if (fresh) order.push_back(j.evaluator_id);
    for (const auto& m : j.marked_irrelevant) {
      if (item_set.contains(m)) it->second.insert(m);
    }
  }
  if (order.empty()) throw Error(ErrorCode::NoJudgments, subject_id);

  CoherenceReport report;
  report.subject_id = subject_id;
  report.n_items = item_set.size();
  const auto n = static_cast<double>(report.n_items);
  for (const auto& evaluator : order) {
    const auto m = marks[evaluator].size();
    report.total_marked += m;
    report.per_evaluator.emplace_back(evaluator, (n - static_cast<double>(m)) / n);
  }
  // Integer numerator and denominator keep the mean independent of evaluator order.
  const auto denom = report.n_items * order.size();
  report.mean_coherence = static_cast<double>(denom - report.total_marked) / static_cast<double>(denom);
  return report;
}

CoherenceReport topic_coherence_report(const taxonomy::Taxonomy& taxonomy,
                                       const std::vector<JudgmentSet>& judgments) {
  std::vector<std::string> items;
  for (const auto& node : taxonomy.nodes) {
    if (node.id != taxonomy.root_id) items.push_back(node.label);
  }
  if (items.empty()) throw Error(ErrorCode::InvalidTaxonomy, "taxonomy '" + taxonomy.topic + "' has no terms");
  return coherence_report(taxonomy.topic, items, Subject::TaxonomyTerms, judgments);
}

CoherenceReport merchant_coherence_report(const tagger::TagAssignment& assignment,
                                          const std::vector<JudgmentSet>& judgments) {
  if (assignment.tags.empty()) throw Error(ErrorCode::NoTags, assignment.merchant_id);
  std::vector<std::string> items;
  for (const auto& t : assignment.tags) items.push_back(t.label);
  return coherence_report(assignment.merchant_id, items, Subject::MerchantTags, judgments);
}

std::vector<corpus::MerchantRecord> top_merchants(const std::vector<corpus::MerchantRecord>& records,
                                                  const std::string& micro_category, std::size_t n) {
  std::vector<corpus::MerchantRecord> out;
  const auto wanted = text::normalize_label(micro_category);
  for (const auto& r : records) {
    if (text::normalize_label(r.micro_category) == wanted) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.transaction_count != b.transaction_count) return a.transaction_count > b.transaction_count;
    return a.merchant_id < b.merchant_id;
  });
  if (out.size() > n) out.resize(n);
  return out;
}

std::string to_json(const CoherenceReport& report) {
  nlohmann::ordered_json j;
  j["subject_id"] = report.subject_id;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& [evaluator, ratio] : report.per_evaluator) {
    rows.push_back({{"evaluator_id", evaluator}, {"coherence", ratio}});
  }
  j["per_evaluator"] = std::move(rows);
  j["mean_coherence"] = report.mean_coherence;
  j["n_items"] = report.n_items;
  return j.dump(2);
}

}  // namespace taxo::evaluation
