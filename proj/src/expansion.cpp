#include "taxo/expansion.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/rng.hpp"
#include "taxo/text.hpp"

namespace taxo::expansion {

using taxonomy::NodeId;
using taxonomy::Taxonomy;

std::size_t hidden_count(std::size_t pool, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool) + 0.5));
}

namespace {

Taxonomy without_nodes(const Taxonomy& tax, const std::set<NodeId>& hidden) {
  auto out = Taxonomy::with_root(tax.root().label, tax.provenance);
  out.topic = tax.topic;
  std::function<void(NodeId, NodeId)> attach = [&](NodeId original, NodeId kept) {
    for (const NodeId c : tax.node(original).children) {
      if (hidden.contains(c)) {
        attach(c, kept);
      } else if (auto id = out.add_child(kept, tax.node(c).label)) {
        attach(c, *id);
      }
    }
  };
  attach(tax.root_id, out.root_id);
  return out;
}

}  // namespace

ExpansionTrial make_trial(const Taxonomy& taxonomy, std::uint64_t seed, const TrialOptions& options) {
  if (!(options.hidden_fraction > 0.0 && options.hidden_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("hidden fraction {}", options.hidden_fraction));
  }
  const auto leaves = taxonomy.leaves();
  if (leaves.size() < 5) {
    throw Error(ErrorCode::TooFewLeaves,
                fmt::format("'{}' has {} leaves, need at least 5", taxonomy.topic, leaves.size()));
  }
  std::vector<NodeId> pool = leaves;
  if (options.include_internal) {
    pool.clear();
    for (const auto& n : taxonomy.nodes) {
      if (n.id != taxonomy.root_id) pool.push_back(n.id);
    }
  }

  ExpansionTrial trial;
  trial.taxonomy_id = taxonomy.topic;
  trial.seed = seed;
  trial.hidden_fraction = options.hidden_fraction;

  Xoshiro256 rng(seed);
  std::set<NodeId> hidden;
  for (const auto idx : sample_without_replacement(pool.size(), hidden_count(pool.size(), options.hidden_fraction), rng)) {
    const NodeId id = pool[idx];
    hidden.insert(id);
    trial.hidden.push_back({taxonomy.node(id).label, taxonomy.node(*taxonomy.node(id).parent).label});
  }
  const auto reduced = without_nodes(taxonomy, hidden);
  trial.context_prompt = taxonomy::to_prompt_context(reduced);
  trial.candidates = reduced.labels();
  return trial;
}

ExpansionTrial run_trial(ExpansionTrial trial, llm::Gateway& gateway) {
  trial.predictions.assign(trial.hidden.size(), {});
  const auto n = static_cast<std::ptrdiff_t>(trial.hidden.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& h = trial.hidden[static_cast<std::size_t>(i)];
    auto& p = trial.predictions[static_cast<std::size_t>(i)];
    p.term = h.term;
    const auto prompt =
        trial.context_prompt + "\n" + llm::render(llm::TemplateId::ParentQuery, {{"new_term", h.term}});
    try {
      p.raw_reply = gateway.complete(prompt).raw_reply;
      p.predicted_parent = llm::parse_parent(p.raw_reply, trial.candidates);
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  }
  return trial;
}

ExpansionScore score_trial(const ExpansionTrial& trial) {
  if (trial.predictions.empty() || trial.predictions.size() != trial.hidden.size()) {
    throw Error(ErrorCode::NoPredictions, trial.taxonomy_id);
  }
  ExpansionScore s;
  s.total_hidden = trial.hidden.size();
  for (std::size_t i = 0; i < trial.predictions.size(); ++i) {
    const auto& p = trial.predictions[i];
    if (!p.predicted_parent) continue;
    ++s.answered;
    if (text::normalize_label(*p.predicted_parent) == text::normalize_label(trial.hidden[i].true_parent)) {
      ++s.correct;
    }
  }
  s.precision_undefined = s.answered == 0;
  s.precision = s.answered ? static_cast<double>(s.correct) / static_cast<double>(s.answered) : 0.0;
  s.recall = static_cast<double>(s.correct) / static_cast<double>(s.total_hidden);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

const BenchmarkCell& BenchmarkResult::cell(std::size_t provider, std::size_t taxonomy) const {
  return cells.at(provider * taxonomies.size() + taxonomy);
}

BenchmarkResult benchmark(const std::vector<NamedTaxonomy>& taxonomies, const std::vector<llm::Gateway*>& gateways,
                          const std::vector<std::uint64_t>& seeds, const TrialOptions& options) {
  if (taxonomies.empty()) throw Error(ErrorCode::InvalidArgument, "benchmark needs a taxonomy");
  if (gateways.empty()) throw Error(ErrorCode::InvalidArgument, "benchmark needs a provider");
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "benchmark needs a seed");
  BenchmarkResult result;
  for (auto* g : gateways) result.providers.push_back(g->provider_id());
  for (const auto& t : taxonomies) result.taxonomies.push_back(t.id);
  result.cells.resize(gateways.size() * taxonomies.size());

  const auto n = static_cast<std::ptrdiff_t>(result.cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto pi = static_cast<std::size_t>(c) / taxonomies.size();
    const auto ti = static_cast<std::size_t>(c) % taxonomies.size();
    auto& cell = result.cells[static_cast<std::size_t>(c)];
    cell.provider_id = result.providers[pi];
    cell.taxonomy_id = taxonomies[ti].id;
    try {
      double sum = 0.0;
      for (const auto seed : seeds) {
        auto trial = run_trial(make_trial(taxonomies[ti].taxonomy, seed, options), *gateways[pi]);
        trial.taxonomy_id = taxonomies[ti].id;
        cell.scores.push_back(score_trial(trial));
        sum += cell.scores.back().f1;
        cell.trials.push_back(std::move(trial));
      }
      cell.mean_f1 = sum / static_cast<double>(seeds.size());
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  }
  return result;
}

std::string to_csv(const BenchmarkResult& result) {
  std::ostringstream out;
  out << "provider";
  for (const auto& t : result.taxonomies) out << ',' << t;
  out << '\n';
  for (std::size_t p = 0; p < result.providers.size(); ++p) {
    out << result.providers[p];
    for (std::size_t t = 0; t < result.taxonomies.size(); ++t) {
      const auto& f1 = result.cell(p, t).mean_f1;
      out << ',' << (f1 ? fmt::format("{:.4f}", *f1) : std::string("NA"));
    }
    out << '\n';
  }
  return out.str();
}

std::string to_json(const BenchmarkResult& result) {
  nlohmann::ordered_json j;
  j["abstention_policy"] = kAbstentionPolicy;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& cell : result.cells) {
    nlohmann::ordered_json c;
    c["provider"] = cell.provider_id;
    c["taxonomy"] = cell.taxonomy_id;
    c["mean_f1"] = cell.mean_f1 ? nlohmann::ordered_json(*cell.mean_f1) : nlohmann::ordered_json(nullptr);
    if (!cell.error.empty()) c["error"] = cell.error;
    auto trials = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cell.trials.size(); ++i) {
      const auto& trial = cell.trials[i];
      const auto& s = cell.scores[i];
      nlohmann::ordered_json t;
      t["seed"] = trial.seed;
      t["hidden_fraction"] = trial.hidden_fraction;
      t["answered"] = s.answered;
      t["correct"] = s.correct;
      t["total_hidden"] = s.total_hidden;
      t["precision"] = s.precision;
      t["precision_undefined"] = s.precision_undefined;
      t["recall"] = s.recall;
      t["f1"] = s.f1;
      auto terms = nlohmann::ordered_json::array();
      for (std::size_t k = 0; k < trial.hidden.size(); ++k) {
        const auto& p = trial.predictions[k];
        nlohmann::ordered_json row;
        row["term"] = trial.hidden[k].term;
        row["true_parent"] = trial.hidden[k].true_parent;
        row["predicted_parent"] =
            p.predicted_parent ? nlohmann::ordered_json(*p.predicted_parent) : nlohmann::ordered_json(nullptr);
        row["reply"] = p.raw_reply;
        if (!p.error.empty()) row["error"] = p.error;
        terms.push_back(std::move(row));
      }
      t["terms"] = std::move(terms);
      trials.push_back(std::move(t));
    }
    c["trials"] = std::move(trials);
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j.dump(2);
}

std::vector<llm::MockEntry> oracle_entries(const Taxonomy& taxonomy) {
  std::vector<llm::MockEntry> out;
  for (const auto& n : taxonomy.nodes) {
    if (!n.parent) continue;
    out.push_back({llm::render(llm::TemplateId::ParentQuery, {{"new_term", n.label}}),
                   taxonomy.node(*n.parent).label, 0});
  }
  return out;
}

}  // namespace taxo::expansion
