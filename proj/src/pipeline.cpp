#include "taxo/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/evaluation.hpp"
#include "taxo/expansion.hpp"
#include "taxo/hash.hpp"
#include "taxo/tagger.hpp"
#include "taxo/taxonomy.hpp"
#include "taxo/text.hpp"

namespace taxo::pipeline {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

namespace {

bool parse_bool(const std::string& v) {
  const auto s = text::normalize(text::trim(v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::ConfigError, "not a boolean: '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v) {
  std::istringstream in{std::string(text::trim(v))};
  T out{};
  in >> out;
  if (!in || !in.eof()) throw Error(ErrorCode::ConfigError, "not a number: '" + v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = text::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p{std::string(text::trim(v))};
  return (p.is_relative() ? base / p : p).lexically_normal();
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const fs::path&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.merchants", [](auto& c, auto& v, auto& b) { c.merchants = resolve(b, v); }},
      {"data.max_merchants_per_macro",
       [](auto& c, auto& v, auto&) { c.max_merchants_per_macro = parse_number<std::size_t>(v); }},
      {"data.stopwords", [](auto& c, auto& v, auto& b) { c.stopwords = resolve(b, v); }},
      {"data.pos_lexicon", [](auto& c, auto& v, auto& b) { c.pos_lexicon = resolve(b, v); }},
      {"filter.enabled", [](auto& c, auto& v, auto&) { c.use_filter = parse_bool(v); }},
      {"keywords.top_k", [](auto& c, auto& v, auto&) { c.keywords.top_k = parse_number<std::size_t>(v); }},
      {"keywords.max_ngram", [](auto& c, auto& v, auto&) { c.keywords.max_ngram = parse_number<std::size_t>(v); }},
      {"keywords.dedup_threshold",
       [](auto& c, auto& v, auto&) { c.keywords.dedup_threshold = parse_number<double>(v); }},
      {"keywords.cooccur_window",
       [](auto& c, auto& v, auto&) { c.keywords.cooccur_window = parse_number<std::size_t>(v); }},
      {"lda.min_bigram_count", [](auto& c, auto& v, auto&) { c.min_bigram_count = parse_number<std::size_t>(v); }},
      {"lda.k_min", [](auto& c, auto& v, auto&) { c.k_min = parse_number<std::uint32_t>(v); }},
      {"lda.k_max", [](auto& c, auto& v, auto&) { c.k_max = parse_number<std::uint32_t>(v); }},
      {"lda.sweeps", [](auto& c, auto& v, auto&) { c.gibbs.sweeps = parse_number<int>(v); }},
      {"lda.burn_in", [](auto& c, auto& v, auto&) { c.gibbs.burn_in = parse_number<int>(v); }},
      {"lda.hyper_update_every", [](auto& c, auto& v, auto&) { c.gibbs.hyper_update_every = parse_number<int>(v); }},
      {"lda.beta", [](auto& c, auto& v, auto&) { c.gibbs.beta = parse_number<double>(v); }},
      {"lda.alpha_init", [](auto& c, auto& v, auto&) { c.gibbs.alpha_init = parse_number<double>(v); }},
      {"lda.coherence_top_n", [](auto& c, auto& v, auto&) { c.coherence_top_n = parse_number<std::size_t>(v); }},
      {"lda.topic_raw_top", [](auto& c, auto& v, auto&) { c.topic_raw_top = parse_number<std::size_t>(v); }},
      {"lda.topic_keep_fraction",
       [](auto& c, auto& v, auto&) { c.topic_keep_fraction = parse_number<double>(v); }},
      {"llm.cache_dir", [](auto& c, auto& v, auto& b) { c.cache_dir = resolve(b, v); }},
      {"llm.mock", [](auto& c, auto& v, auto& b) { c.mock_script = resolve(b, v); }},
      {"llm.retries", [](auto& c, auto& v, auto&) { c.retries = parse_number<int>(v); }},
      {"llm.timeout_ms", [](auto& c, auto& v, auto&) { c.timeout_ms = parse_number<int>(v); }},
      {"llm.backoff_ms", [](auto& c, auto& v, auto&) { c.backoff_ms = parse_number<int>(v); }},
      {"llm.max_in_flight", [](auto& c, auto& v, auto&) { c.max_in_flight = parse_number<std::size_t>(v); }},
      {"tagging.leaves_only", [](auto& c, auto& v, auto&) { c.leaves_only = parse_bool(v); }},
      {"expansion.hidden_fraction", [](auto& c, auto& v, auto&) { c.hidden_fraction = parse_number<double>(v); }},
      {"expansion.seeds",
       [](auto& c, auto& v, auto&) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(s));
       }},
      {"expansion.include_internal", [](auto& c, auto& v, auto&) { c.include_internal = parse_bool(v); }},
      {"expansion.semeval",
       [](auto& c, auto& v, auto& b) {
         c.semeval.clear();
         for (const auto& s : split_list(v)) c.semeval.push_back(resolve(b, s));
       }},
      {"expansion.oracle", [](auto& c, auto& v, auto&) { c.oracle = parse_bool(v); }},
      {"evaluation.judgments", [](auto& c, auto& v, auto& b) { c.judgments = resolve(b, v); }},
      {"run.seed", [](auto& c, auto& v, auto&) { c.seed = parse_number<std::uint64_t>(v); }},
      {"run.output", [](auto& c, auto& v, auto& b) { c.output_dir = resolve(b, v); }},
  };
  return table;
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  PipelineConfig config;
  const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  for (const auto& [section, entries] : tree) {
    for (const auto& [key, value] : entries) {
      const auto name = section + "." + key;
      auto it = setters().find(name);
      if (it == setters().end()) throw Error(ErrorCode::ConfigError, path.string() + ": unknown key " + name);
      try {
        it->second(config, value.data(), base);
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + name + ": " + e.what());
      }
    }
  }
  return config;
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

class InputHash {
public:
  void add(std::string_view key, std::string_view value) {
    buf_ += key;
    buf_ += '=';
    buf_ += value;
    buf_ += '\n';
  }
  void add_file(std::string_view key, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      add(key, "<missing>");
      return;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    add(key, sha256_hex(ss.str()));
  }
  std::string digest() const { return sha256_hex(buf_); }

private:
  std::string buf_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, path.string());
  out << contents;
}

void add_provider(InputHash& h, const PipelineConfig& c) {
  if (c.oracle) {
    h.add("provider", "oracle");
  } else if (!c.mock_script.empty()) {
    h.add("provider", "mock:" + c.mock_script.stem().string());
    h.add_file("mock_script", c.mock_script);
  } else {
    const char* endpoint = std::getenv("TAXO_LLM_ENDPOINT");
    const char* model = std::getenv("TAXO_LLM_MODEL");
    h.add("provider", std::string("http:") + (endpoint ? endpoint : "") + ":" + (model ? model : "gpt-4"));
  }
}

void add_corpus(InputHash& h, const PipelineConfig& c) {
  h.add_file("merchants", c.merchants);
  h.add("max_merchants_per_macro", std::to_string(c.max_merchants_per_macro));
  h.add_file("stopwords", c.stopwords);
  h.add_file("pos_lexicon", c.pos_lexicon);
}

void add_selection(InputHash& h, const PipelineConfig& c) {
  h.add("keywords", fmt::format("{} {} {} {}", c.keywords.top_k, c.keywords.max_ngram, c.keywords.dedup_threshold,
                                c.keywords.cooccur_window));
  h.add("lda", fmt::format("{} {} {} {} {} {} {} {} {} {} {} {}", c.min_bigram_count, c.k_min, c.k_max,
                           c.gibbs.sweeps, c.gibbs.burn_in, c.gibbs.hyper_update_every, c.gibbs.beta,
                           c.gibbs.alpha_init, c.coherence_top_n, c.topic_raw_top, c.topic_keep_fraction, c.seed));
}

/// True when the stage manifest records the same inputs and every output exists.
bool up_to_date(const fs::path& manifest_path, const std::string& input_hash) {
  std::ifstream in(manifest_path);
  if (!in) return false;
  try {
    const auto j = json::parse(in);
    if (j.value("input_hash", std::string{}) != input_hash || j.value("status", std::string{}) != "ok") return false;
    for (const auto& out : j.at("outputs")) {
      if (!fs::exists(manifest_path.parent_path() / out.get<std::string>())) return false;
    }
    return true;
  } catch (const json::exception&) {
    return false;
  }
}

void write_manifest(const fs::path& path, std::string_view stage, const std::string& input_hash,
                    const StageReport& report, const std::vector<std::string>& outputs, json extra = json::object()) {
  json j;
  j["stage"] = stage;
  j["input_hash"] = input_hash;
  j["status"] = report.ok() ? "ok" : "failed";
  j["outputs"] = outputs;
  for (auto& [k, v] : extra.items()) j[k] = std::move(v);
  if (!report.errors.empty()) j["errors"] = report.errors;
  write_file(path, j.dump(2) + "\n");
}

std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& c, std::shared_ptr<llm::Provider> provider) {
  llm::RetryBudget budget;
  budget.retries = c.retries;
  budget.timeout = std::chrono::milliseconds(c.timeout_ms);
  budget.backoff = std::chrono::milliseconds(c.mock_script.empty() && !c.oracle ? c.backoff_ms : 0);
  std::optional<fs::path> cache;
  if (!c.cache_dir.empty()) cache = c.cache_dir;
  return std::make_unique<llm::Gateway>(std::move(provider), cache, budget, c.max_in_flight);
}

struct Resources {
  std::vector<corpus::MerchantRecord> records;
  corpus::StopwordSet stopwords;
  std::unique_ptr<corpus::PosProvider> pos;
};

Resources load_resources(const PipelineConfig& c) {
  if (c.merchants.empty()) throw Error(ErrorCode::ConfigError, "no merchants file configured");
  Resources r;
  r.records = corpus::ingest_merchants(c.merchants, corpus::format_from_path(c.merchants), c.max_merchants_per_macro);
  if (!c.stopwords.empty()) r.stopwords = corpus::StopwordSet::load(c.stopwords);
  if (!c.pos_lexicon.empty()) {
    r.pos = std::make_unique<corpus::LexiconPosProvider>(corpus::LexiconPosProvider::load(c.pos_lexicon));
  } else {
    r.pos = std::make_unique<corpus::PassthroughPosProvider>();
  }
  return r;
}

std::vector<std::string> macro_order(const std::vector<corpus::MerchantRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (std::find(out.begin(), out.end(), r.macro_category) == out.end()) out.push_back(r.macro_category);
  }
  return out;
}

fs::path filter_path(const PipelineConfig& c, const std::string& macro) {
  return c.output_dir / "filters" / (text::slug(macro) + ".txt");
}

template <typename Fn>
StageReport run_stage(std::string name, Fn&& fn) {
  StageReport report;
  report.stage = std::move(name);
  try {
    fn(report);
  } catch (const std::exception& e) {
    report.errors.push_back(report.stage + ": " + e.what());
  }
  return report;
}

struct LoadedTaxonomy {
  std::string id;
  taxonomy::Taxonomy taxonomy;
};

/// Taxonomies recorded as built in taxonomies/manifest.json, in manifest order.
std::vector<LoadedTaxonomy> load_built_taxonomies(const PipelineConfig& c) {
  const auto dir = c.output_dir / "taxonomies";
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::UnreadableFile, manifest_path.string() + " (run build-taxonomies first)");
  }
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedStructure, manifest_path.string() + ": " + e.what());
  }
  std::vector<LoadedTaxonomy> out;
  for (const auto& entry : manifest.at("taxonomies")) {
    if (entry.value("status", std::string{}) != "ok") continue;
    out.push_back({entry.at("topic").get<std::string>(),
                   taxonomy::Taxonomy::load(dir / entry.at("file").get<std::string>())});
  }
  return out;
}

}  // namespace

std::shared_ptr<llm::Provider> make_provider(const PipelineConfig& config) {
  if (!config.mock_script.empty()) return llm::MockProvider::load(config.mock_script);
  if (auto http = llm::HttpProvider::from_env()) return http;
  throw Error(ErrorCode::ConfigError,
              "no --mock script and no live provider (set TAXO_LLM_ENDPOINT and the API key variable)");
}

std::vector<std::string> candidate_terms(const corpus::SubCorpus& subcorpus, const PipelineConfig& config) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](const std::string& term) {
    auto norm = text::normalize_label(term);
    if (!norm.empty() && seen.insert(norm).second) out.push_back(term);
  };
  for (const auto& kw : keywords::extract_keywords(subcorpus, config.keywords)) push(kw.surface);
  const auto from_keywords = out.size();

  const auto encoded = lda::build_dictionary(subcorpus, config.min_bigram_count);
  if (encoded.docs.empty()) return out;
  std::vector<std::uint32_t> ks;
  for (auto k = config.k_min; k <= config.k_max; ++k) ks.push_back(k);
  const auto selection = lda::select_topic_count(encoded.docs, encoded.dictionary.entries, ks, config.seed,
                                                 config.gibbs, config.coherence_top_n);
  for (const auto& topic : lda::topic_terms(selection.model, config.topic_raw_top, config.topic_keep_fraction)) {
    for (const auto& [term, weight] : topic.terms) push(term);
  }
  spdlog::debug("{}: {} keywords, {} more from {} topics: {}", subcorpus.micro_category, from_keywords,
                out.size() - from_keywords, selection.model.k, text::join(out, " | "));
  return out;
}

// ---------------------------------------------------------------------------
// Stages

StageReport build_filter(const PipelineConfig& c) {
  return run_stage("build-filter", [&](StageReport& report) {
    const auto dir = c.output_dir / "filters";
    InputHash h;
    h.add("stage", "build-filter");
    add_corpus(h, c);
    add_selection(h, c);
    add_provider(h, c);
    const auto hash = h.digest();
    if (!c.force && up_to_date(dir / "manifest.json", hash)) {
      report.up_to_date = true;
      report.lines.push_back("filters up to date");
      return;
    }

    const auto res = load_resources(c);
    corpus::PreprocessOptions opts{&res.stopwords, res.pos.get(), nullptr};
    const auto subcorpora = corpus::build_subcorpora(res.records, opts);
    auto gateway = make_gateway(c, make_provider(c));
    const auto select = [&](const corpus::SubCorpus& sc) { return candidate_terms(sc, c); };

    std::vector<std::string> outputs;
    json counts = json::object();
    for (const auto& macro : macro_order(res.records)) {
      try {
        std::vector<corpus::FilterBuildLog> log;
        const auto filter = corpus::build_generic_filter(macro, subcorpora, select, *gateway, &log);
        const auto path = filter_path(c, macro);
        filter.save(path);
        outputs.push_back(path.filename().string());
        for (const auto& entry : log) {
          report.lines.push_back(fmt::format("{} / {}: {} candidates, {} generic", macro, entry.micro_category,
                                             entry.candidate_count, entry.unrelated.size()));
          counts[macro][entry.micro_category] = {{"candidates", entry.candidate_count},
                                                 {"generic", entry.unrelated.size()}};
        }
        report.lines.push_back(fmt::format("{}: {} words -> {}", macro, filter.words.size(), path.string()));
      } catch (const std::exception& e) {
        report.errors.push_back(fmt::format("build-filter [{}]: {}", macro, e.what()));
      }
    }
    write_manifest(dir / "manifest.json", "build-filter", hash, report, outputs, json{{"categories", counts}});
  });
}

StageReport build_taxonomies(const PipelineConfig& c) {
  return run_stage("build-taxonomies", [&](StageReport& report) {
    const auto dir = c.output_dir / "taxonomies";
    const auto res = load_resources(c);
    const auto macros = macro_order(res.records);

    InputHash h;
    h.add("stage", "build-taxonomies");
    add_corpus(h, c);
    add_selection(h, c);
    add_provider(h, c);
    h.add("use_filter", c.use_filter ? "1" : "0");
    if (c.use_filter) {
      for (const auto& macro : macros) h.add_file("filter:" + macro, filter_path(c, macro));
    }
    const auto hash = h.digest();
    if (!c.force && up_to_date(dir / "manifest.json", hash)) {
      report.up_to_date = true;
      report.lines.push_back("taxonomies up to date");
      return;
    }

    std::map<std::string, corpus::GenericWordFilter> filters;
    if (c.use_filter) {
      for (const auto& macro : macros) {
        const auto path = filter_path(c, macro);
        if (!fs::exists(path)) {
          throw Error(ErrorCode::UnreadableFile, path.string() + " (run build-filter first or disable the filter)");
        }
        filters.emplace(macro, corpus::GenericWordFilter::load(path, macro));
      }
    }
    corpus::PreprocessOptions opts{&res.stopwords, res.pos.get(), c.use_filter ? &filters : nullptr};
    const auto subcorpora = corpus::build_subcorpora(res.records, opts);
    auto gateway = make_gateway(c, make_provider(c));

    std::vector<std::string> outputs;
    auto entries = json::array();
    std::set<std::string> used_files;
    for (const auto& sc : subcorpora) {
      json entry;
      entry["topic"] = sc.micro_category;
      entry["macro"] = sc.macro_category;
      try {
        if (sc.empty()) {
          entry["status"] = "skipped";
          entry["reason"] = "empty sub-corpus after filtering";
          entries.push_back(std::move(entry));
          report.lines.push_back(fmt::format("{}: skipped (empty sub-corpus)", sc.micro_category));
          continue;
        }
        const auto candidates = candidate_terms(sc, c);
        const auto separation = llm::parse_separation(
            gateway->complete(llm::render(llm::TemplateId::SeparateTerms,
                                          {{"words_list", candidates}, {"type", sc.micro_category}}))
                .raw_reply,
            candidates);
        if (separation.related.empty()) {
          entry["status"] = "skipped";
          entry["reason"] = "no related terms";
          entries.push_back(std::move(entry));
          report.lines.push_back(fmt::format("{}: skipped (no related terms)", sc.micro_category));
          continue;
        }
        const auto hierarchy = llm::parse_hierarchy(
            gateway->complete(llm::render(llm::TemplateId::BuildHierarchy, {{"words_list", separation.related}}))
                .raw_reply,
            separation.related);
        taxonomy::ConstructionLog log;
        const auto tax = taxonomy::from_hierarchy_result(sc.micro_category, hierarchy, &log);
        auto file = text::slug(sc.micro_category) + ".json";
        for (int n = 2; used_files.contains(file); ++n) {
          file = text::slug(sc.micro_category) + "_" + std::to_string(n) + ".json";
        }
        used_files.insert(file);
        tax.save(dir / file);
        outputs.push_back(file);
        entry["status"] = "ok";
        entry["file"] = file;
        entry["candidates"] = candidates.size();
        entry["related"] = separation.related.size();
        entry["nodes"] = tax.size();
        entry["leaves"] = tax.leaves().size();
        report.lines.push_back(fmt::format("{}: {} candidates, {} related, {} nodes", sc.micro_category,
                                           candidates.size(), separation.related.size(), tax.size()));
      } catch (const std::exception& e) {
        entry["status"] = "error";
        entry["error"] = e.what();
        report.errors.push_back(fmt::format("build-taxonomies [{}]: {}", sc.micro_category, e.what()));
      }
      entries.push_back(std::move(entry));
    }
    write_manifest(dir / "manifest.json", "build-taxonomies", hash, report, outputs,
                   json{{"taxonomies", std::move(entries)}});
  });
}

StageReport tag(const PipelineConfig& c) {
  return run_stage("tag", [&](StageReport& report) {
    const auto dir = c.output_dir / "tags";
    InputHash h;
    h.add("stage", "tag");
    h.add_file("merchants", c.merchants);
    h.add_file("taxonomies", c.output_dir / "taxonomies" / "manifest.json");
    h.add("leaves_only", c.leaves_only ? "1" : "0");
    const auto built = load_built_taxonomies(c);
    for (const auto& t : built) h.add("taxonomy:" + t.id, sha256_hex(t.taxonomy.to_json()));
    const auto hash = h.digest();
    if (!c.force && up_to_date(dir / "manifest.json", hash)) {
      report.up_to_date = true;
      report.lines.push_back("tags up to date");
      return;
    }

    const auto records = corpus::ingest_merchants(c.merchants, corpus::format_from_path(c.merchants),
                                                  c.max_merchants_per_macro);
    std::map<std::string, taxonomy::Taxonomy> taxonomies;
    for (const auto& t : built) taxonomies.emplace(t.taxonomy.topic, t.taxonomy);
    const auto result = tagger::tag_dataset(records, taxonomies, c.leaves_only);
    tagger::save_assignments(dir / "tags.jsonl", result.assignments);

    json skipped;
    skipped["total"] = result.skipped_total();
    skipped["by_category"] = result.skipped;
    write_file(dir / "skipped.json", skipped.dump(2) + "\n");

    std::size_t tagged = 0;
    std::size_t tags = 0;
    for (const auto& a : result.assignments) {
      tagged += a.tags.empty() ? 0 : 1;
      tags += a.tags.size();
    }
    report.lines.push_back(fmt::format("{} merchants covered, {} with tags, {} tags, {} skipped",
                                       result.assignments.size(), tagged, tags, result.skipped_total()));
    write_manifest(dir / "manifest.json", "tag", hash, report, {"tags.jsonl", "skipped.json"});
  });
}

StageReport expand_eval(const PipelineConfig& c) {
  return run_stage("expand-eval", [&](StageReport& report) {
    const auto dir = c.output_dir / "expansion";
    std::vector<expansion::NamedTaxonomy> taxonomies;
    if (c.semeval.empty() || fs::exists(c.output_dir / "taxonomies" / "manifest.json")) {
      for (auto& t : load_built_taxonomies(c)) taxonomies.push_back({t.id, std::move(t.taxonomy)});
    }
    for (const auto& path : c.semeval) {
      taxonomies.push_back({"semeval:" + path.stem().string(), taxonomy::load_semeval_edges(path)});
    }

    InputHash h;
    h.add("stage", "expand-eval");
    add_provider(h, c);
    h.add("expansion", fmt::format("{} {}", c.hidden_fraction, c.include_internal));
    for (const auto s : c.seeds) h.add("seed", std::to_string(s));
    for (const auto& t : taxonomies) h.add("taxonomy:" + t.id, sha256_hex(t.taxonomy.to_json()));
    const auto hash = h.digest();
    if (!c.force && up_to_date(dir / "manifest.json", hash)) {
      report.up_to_date = true;
      report.lines.push_back("expansion scores up to date");
      return;
    }

    std::vector<expansion::NamedTaxonomy> eligible;
    auto skipped = json::array();
    for (auto& t : taxonomies) {
      if (t.taxonomy.leaves().size() < 5) {
        skipped.push_back({{"taxonomy", t.id}, {"leaves", t.taxonomy.leaves().size()}});
        report.lines.push_back(fmt::format("{}: skipped ({} leaves)", t.id, t.taxonomy.leaves().size()));
      } else {
        eligible.push_back(std::move(t));
      }
    }
    if (eligible.empty()) throw Error(ErrorCode::TooFewLeaves, "no taxonomy has at least 5 leaves");

    std::shared_ptr<llm::Provider> provider;
    if (c.oracle) {
      std::vector<llm::MockEntry> entries;
      for (const auto& t : eligible) {
        for (auto& e : expansion::oracle_entries(t.taxonomy)) entries.push_back(std::move(e));
      }
      provider = std::make_shared<llm::MockProvider>(std::move(entries), "oracle");
    } else {
      provider = make_provider(c);
    }
    auto gateway = make_gateway(c, provider);
    expansion::TrialOptions opts{c.hidden_fraction, c.include_internal};
    const auto result = expansion::benchmark(eligible, {gateway.get()}, c.seeds, opts);

    write_file(dir / "scores.csv", expansion::to_csv(result));
    write_file(dir / "scores.json", expansion::to_json(result) + "\n");
    for (const auto& cell : result.cells) {
      if (cell.mean_f1) {
        report.lines.push_back(fmt::format("{} x {}: F1 {:.4f}", cell.provider_id, cell.taxonomy_id, *cell.mean_f1));
      } else {
        report.errors.push_back(fmt::format("expand-eval [{} x {}]: {}", cell.provider_id, cell.taxonomy_id, cell.error));
      }
    }
    write_manifest(dir / "manifest.json", "expand-eval", hash, report, {"scores.csv", "scores.json"},
                   json{{"skipped", std::move(skipped)}, {"abstention_policy", expansion::kAbstentionPolicy}});
  });
}

StageReport coherence(const PipelineConfig& c) {
  return run_stage("coherence", [&](StageReport& report) {
    if (c.judgments.empty()) throw Error(ErrorCode::ConfigError, "no judgments file (--judgments)");
    const auto dir = c.output_dir / "coherence";

    std::vector<taxonomy::Taxonomy> taxonomies;
    if (fs::exists(c.output_dir / "taxonomies" / "manifest.json")) {
      for (auto& t : load_built_taxonomies(c)) taxonomies.push_back(std::move(t.taxonomy));
    }
    for (const auto& path : c.semeval) taxonomies.push_back(taxonomy::load_semeval_edges(path));
    std::vector<tagger::TagAssignment> assignments;
    if (fs::exists(c.output_dir / "tags" / "tags.jsonl")) {
      assignments = tagger::load_assignments(c.output_dir / "tags" / "tags.jsonl");
    }

    InputHash h;
    h.add("stage", "coherence");
    h.add_file("judgments", c.judgments);
    for (const auto& t : taxonomies) h.add("taxonomy", sha256_hex(t.to_json()));
    h.add_file("tags", c.output_dir / "tags" / "tags.jsonl");
    const auto hash = h.digest();
    if (!c.force && up_to_date(dir / "manifest.json", hash)) {
      report.up_to_date = true;
      report.lines.push_back("coherence reports up to date");
      return;
    }

    const auto judgments = evaluation::load_judgments(c.judgments, evaluation::make_lookup(taxonomies, assignments));
    std::vector<std::pair<evaluation::Subject, std::string>> subjects;
    for (const auto& j : judgments) {
      const auto key = std::make_pair(j.subject, j.subject_id);
      if (std::find(subjects.begin(), subjects.end(), key) == subjects.end()) subjects.push_back(key);
    }
    std::vector<std::string> outputs;
    for (const auto& [subject, id] : subjects) {
      try {
        evaluation::CoherenceReport r;
        if (subject == evaluation::Subject::TaxonomyTerms) {
          auto it = std::find_if(taxonomies.begin(), taxonomies.end(), [&](const auto& t) {
            return text::normalize_label(t.topic) == text::normalize_label(id);
          });
          r = evaluation::topic_coherence_report(*it, judgments);
        } else {
          auto it = std::find_if(assignments.begin(), assignments.end(),
                                 [&](const auto& a) { return a.merchant_id == id; });
          r = evaluation::merchant_coherence_report(*it, judgments);
        }
        const auto file = std::string(evaluation::to_string(subject)) + "_" + text::slug(id) + ".json";
        write_file(dir / file, evaluation::to_json(r) + "\n");
        outputs.push_back(file);
        report.lines.push_back(fmt::format("{} {}: {:.2f}% over {} items, {} evaluators",
                                           evaluation::to_string(subject), id, 100.0 * r.mean_coherence,
                                           r.n_items, r.per_evaluator.size()));
      } catch (const std::exception& e) {
        report.errors.push_back(fmt::format("coherence [{}]: {}", id, e.what()));
      }
    }
    write_manifest(dir / "manifest.json", "coherence", hash, report, outputs);
  });
}

StageReport load_semeval(const PipelineConfig& c) {
  return run_stage("load-semeval", [&](StageReport& report) {
    if (c.semeval.empty()) throw Error(ErrorCode::ConfigError, "no SemEval edge files given");
    const auto dir = c.output_dir / "semeval";
    InputHash h;
    h.add("stage", "load-semeval");
    for (const auto& p : c.semeval) h.add_file(p.filename().string(), p);
    const auto hash = h.digest();
    if (!c.force && up_to_date(dir / "manifest.json", hash)) {
      report.up_to_date = true;
      report.lines.push_back("SemEval taxonomies up to date");
      return;
    }
    std::vector<std::string> outputs;
    auto entries = json::array();
    for (const auto& path : c.semeval) {
      try {
        const auto tax = taxonomy::load_semeval_edges(path);
        const auto file = text::slug(path.stem().string()) + ".json";
        tax.save(dir / file);
        outputs.push_back(file);
        entries.push_back({{"source", path.filename().string()},
                           {"file", file},
                           {"root", tax.root().label},
                           {"nodes", tax.size()},
                           {"leaves", tax.leaves().size()}});
        report.lines.push_back(fmt::format("{}: root '{}', {} nodes, {} leaves", path.filename().string(),
                                           tax.root().label, tax.size(), tax.leaves().size()));
      } catch (const std::exception& e) {
        report.errors.push_back(fmt::format("load-semeval [{}]: {}", path.filename().string(), e.what()));
      }
    }
    write_manifest(dir / "manifest.json", "load-semeval", hash, report, outputs,
                   json{{"taxonomies", std::move(entries)}});
  });
}

}  // namespace taxo::pipeline
