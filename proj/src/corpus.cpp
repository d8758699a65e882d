#include "taxo/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/llm.hpp"
#include "taxo/text.hpp"

namespace taxo::corpus {

namespace {

constexpr std::array<std::string_view, 6> kColumns = {
    "merchant_id", "merchant_name", "macro_category", "micro_category", "description",
    "transaction_count"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RFC 4180 rows; quoted fields may contain separators, quotes ("") and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view data) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t parse_count(std::string_view s, std::size_t row) {
  s = text::trim(s);
  if (s.empty()) return 0;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MissingField,
                fmt::format("row {}: transaction_count is not a non-negative integer", row));
  }
  return v;
}

void require(const std::string& value, std::string_view field, std::size_t row) {
  if (text::trim(value).empty()) {
    throw Error(ErrorCode::MissingField, fmt::format("row {}: {}", row, field));
  }
}

std::vector<MerchantRecord> read_csv(const std::string& data) {
  auto rows = parse_csv(data);
  std::vector<MerchantRecord> out;
  if (rows.empty()) return out;
  std::array<int, kColumns.size()> col{};
  col.fill(-1);
  const auto& header = rows.front();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = text::trim(header[i]);
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      if (name == kColumns[c]) col[c] = static_cast<int>(i);
    }
  }
  for (std::size_t c = 0; c + 1 < kColumns.size(); ++c) {
    if (col[c] < 0) throw Error(ErrorCode::MissingField, fmt::format("header: {}", kColumns[c]));
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto field = [&](std::size_t c) -> std::string {
      if (col[c] < 0) return {};
      const auto idx = static_cast<std::size_t>(col[c]);
      if (idx >= row.size()) {
        if (c == 4 || c == 5) return {};
        throw Error(ErrorCode::MissingField, fmt::format("row {}: {}", r, kColumns[c]));
      }
      return row[idx];
    };
    MerchantRecord rec;
    rec.merchant_id = std::string(text::trim(field(0)));
    rec.merchant_name = field(1);
    rec.macro_category = std::string(text::trim(field(2)));
    rec.micro_category = std::string(text::trim(field(3)));
    rec.description = field(4);
    require(rec.merchant_id, "merchant_id", r);
    require(rec.merchant_name, "merchant_name", r);
    require(rec.macro_category, "macro_category", r);
    require(rec.micro_category, "micro_category", r);
    rec.transaction_count = parse_count(field(5), r);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MerchantRecord> read_jsonl(const std::string& data) {
  std::vector<MerchantRecord> out;
  std::istringstream in(data);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, fmt::format("row {}: {}", row, e.what()));
    }
    auto str = [&](std::string_view key, bool required) -> std::string {
      auto it = j.find(std::string(key));
      if (it == j.end() || it->is_null()) {
        if (required) throw Error(ErrorCode::MissingField, fmt::format("row {}: {}", row, key));
        return {};
      }
      if (!it->is_string()) {
        throw Error(ErrorCode::MissingField, fmt::format("row {}: {} is not a string", row, key));
      }
      return it->get<std::string>();
    };
    MerchantRecord rec;
    rec.merchant_id = str("merchant_id", true);
    rec.merchant_name = str("merchant_name", true);
    rec.macro_category = str("macro_category", true);
    rec.micro_category = str("micro_category", true);
    if (!j.contains("description")) {
      throw Error(ErrorCode::MissingField, fmt::format("row {}: description", row));
    }
    rec.description = str("description", false);
    require(rec.merchant_id, "merchant_id", row);
    require(rec.merchant_name, "merchant_name", row);
    require(rec.macro_category, "macro_category", row);
    require(rec.micro_category, "micro_category", row);
    if (auto it = j.find("transaction_count"); it != j.end() && !it->is_null()) {
      if (it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
        rec.transaction_count = it->get<std::uint64_t>();
      } else if (it->is_string()) {
        rec.transaction_count = parse_count(it->get<std::string>(), row);
      } else {
        throw Error(ErrorCode::MissingField,
                    fmt::format("row {}: transaction_count is not a non-negative integer", row));
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void keep_top_per_macro(std::vector<MerchantRecord>& records, std::size_t cap) {
  std::map<std::string, std::vector<std::size_t>> by_macro;
  for (std::size_t i = 0; i < records.size(); ++i) by_macro[records[i].macro_category].push_back(i);
  std::vector<bool> keep(records.size(), true);
  for (auto& [macro, idx] : by_macro) {
    if (idx.size() <= cap) continue;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (records[a].transaction_count != records[b].transaction_count) {
        return records[a].transaction_count > records[b].transaction_count;
      }
      return records[a].merchant_id < records[b].merchant_id;
    });
    for (std::size_t k = cap; k < idx.size(); ++k) keep[idx[k]] = false;
  }
  std::vector<MerchantRecord> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) kept.push_back(std::move(records[i]));
  }
  records = std::move(kept);
}

}  // namespace

bool MerchantRecord::has_description() const { return !text::trim(description).empty(); }

InputFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return InputFormat::Jsonl;
  return InputFormat::Csv;
}

std::vector<MerchantRecord> ingest_merchants(const std::filesystem::path& path, InputFormat format,
                                             std::size_t max_merchants_per_macro) {
  const std::string data = read_file(path);
  auto records = format == InputFormat::Csv ? read_csv(data) : read_jsonl(data);
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.merchant_id).second) throw Error(ErrorCode::DuplicateId, r.merchant_id);
  }
  std::size_t empty = 0;
  for (const auto& r : records) empty += r.has_description() ? 0 : 1;
  if (empty > 0) spdlog::warn("{}: {} record(s) without description", path.string(), empty);
  keep_top_per_macro(records, max_merchants_per_macro);
  return records;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Pos pos) {
  switch (pos) {
    case Pos::ADJ: return "ADJ";
    case Pos::ADP: return "ADP";
    case Pos::ADV: return "ADV";
    case Pos::AUX: return "AUX";
    case Pos::CCONJ: return "CCONJ";
    case Pos::CONJ: return "CONJ";
    case Pos::DET: return "DET";
    case Pos::INTJ: return "INTJ";
    case Pos::NOUN: return "NOUN";
    case Pos::NUM: return "NUM";
    case Pos::PART: return "PART";
    case Pos::PRON: return "PRON";
    case Pos::PROPN: return "PROPN";
    case Pos::PUNCT: return "PUNCT";
    case Pos::SCONJ: return "SCONJ";
    case Pos::SYM: return "SYM";
    case Pos::VERB: return "VERB";
    case Pos::X: return "X";
    case Pos::UNKNOWN: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::optional<Pos> parse_pos(std::string_view label) {
  static constexpr std::array kAll = {Pos::ADJ,   Pos::ADP,  Pos::ADV,   Pos::AUX,  Pos::CCONJ,
                                      Pos::CONJ,  Pos::DET,  Pos::INTJ,  Pos::NOUN, Pos::NUM,
                                      Pos::PART,  Pos::PRON, Pos::PROPN, Pos::PUNCT, Pos::SCONJ,
                                      Pos::SYM,   Pos::VERB, Pos::X,     Pos::UNKNOWN};
  for (Pos p : kAll) {
    if (to_string(p) == label) return p;
  }
  return std::nullopt;
}

bool is_removed_category(Pos pos) {
  switch (pos) {
    case Pos::ADV:
    case Pos::CCONJ:
    case Pos::ADP:
    case Pos::AUX:
    case Pos::CONJ:
    case Pos::DET:
    case Pos::INTJ:
    case Pos::PART:
    case Pos::PRON:
    case Pos::PUNCT:
    case Pos::SYM:
    case Pos::SCONJ:
    case Pos::ADJ:
    case Pos::VERB:
    case Pos::PROPN:
      return true;
    default:
      return false;
  }
}

namespace {

bool is_phrase_break(char32_t c) {
  switch (c) {
    case U',': case U';': case U':': case U'(': case U')': case U'[': case U']':
    case U'{': case U'}': case U'"': case U'/': case U'|': case U'\u2026':
    case U'\u00AB': case U'\u00BB': case U'\u201C': case U'\u201D':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<Token> tokenize(std::string_view description) {
  const std::u32string cps = text::decode_utf8(description);
  std::vector<Token> tokens;
  std::uint32_t sentence = 0;
  std::uint32_t position = 0;
  bool gap = false;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    if (c == U'.' || c == U'!' || c == U'?' || c == U'\n') {
      if (position > 0) {
        ++sentence;
        position = 0;
      }
      gap = false;
      ++i;
      continue;
    }
    if (!text::is_word_char(c) || text::is_combining_mark(c)) {
      if (is_phrase_break(c) && position > 0) gap = true;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && text::is_word_char(cps[j])) ++j;
    const std::size_t run_end = j;
    // Hyphens only count inside a word.
    std::size_t b = i;
    while (b < j && cps[b] == U'-') ++b;
    while (j > b && cps[j - 1] == U'-') --j;
    if (b == j) {
      i = run_end;
      continue;
    }
    Token t;
    t.surface = text::encode_utf8(std::u32string_view(cps).substr(b, j - b));
    t.normalized = text::normalize(t.surface);
    t.sentence_index = sentence;
    if (gap) ++position;
    gap = false;
    t.position_in_sentence = position++;
    tokens.push_back(std::move(t));
    i = run_end;
  }
  return tokens;
}

// ---------------------------------------------------------------------------

LexiconPosProvider LexiconPosProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  LexiconPosProvider lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, fmt::format("{}:{}", path.string(), lineno));
    }
    const auto word = text::trim(t.substr(0, tab));
    const auto label = text::trim(t.substr(tab + 1));
    auto pos = parse_pos(label);
    if (!pos) {
      throw Error(ErrorCode::MalformedLine,
                  fmt::format("{}:{}: unknown POS '{}'", path.string(), lineno, label));
    }
    lex.add(word, *pos);
  }
  return lex;
}

void LexiconPosProvider::add(std::string_view word, Pos pos) {
  const std::string key = text::normalize(word);
  auto& tags = counts_[key];
  auto it = std::find_if(tags.begin(), tags.end(), [&](const auto& p) { return p.first == pos; });
  if (it == tags.end()) {
    tags.emplace_back(pos, 1);
  } else {
    ++it->second;
  }
  finalize(key);
}

void LexiconPosProvider::finalize(const std::string& key) {
  const auto& tags = counts_.at(key);
  Pos best = tags.front().first;
  int best_count = tags.front().second;
  for (const auto& [p, n] : tags) {
    if (n > best_count) {
      best = p;
      best_count = n;
    }
  }
  best_[key] = best;
}

Pos LexiconPosProvider::tag(const Token& token) const {
  auto it = best_.find(token.normalized);
  if (it == best_.end() || it->second == Pos::UNKNOWN) return Pos::NOUN;
  return it->second;
}

StopwordSet::StopwordSet(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    auto n = text::normalize(text::trim(w));
    if (!n.empty()) words_.insert(std::move(n));
  }
}

StopwordSet StopwordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = text::trim(line);
    if (!t.empty()) words.emplace_back(t);
  }
  return StopwordSet(words);
}

bool StopwordSet::contains(std::string_view word) const {
  return words_.count(text::normalize(word)) > 0;
}

void GenericWordFilter::insert(std::string_view word) {
  auto n = text::normalize_label(word);
  if (!n.empty()) words.insert(std::move(n));
}

bool GenericWordFilter::contains(std::string_view word) const {
  return words.count(text::normalize_label(word)) > 0;
}

void GenericWordFilter::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, path.string());
  for (const auto& w : words) out << w << '\n';
}

GenericWordFilter GenericWordFilter::load(const std::filesystem::path& path,
                                          std::string macro_category) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  GenericWordFilter f;
  f.macro_category = std::move(macro_category);
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (!t.empty()) f.insert(t);
  }
  return f;
}

std::vector<Token> preprocess(const std::vector<Token>& tokens, const StopwordSet& stopwords,
                              const PosProvider& pos_provider, const GenericWordFilter* filter) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (stopwords.contains(t.normalized)) continue;
    const Pos pos = pos_provider.tag(t);
    if (is_removed_category(pos)) continue;
    if (filter != nullptr && filter->contains(t.normalized)) continue;
    Token kept = t;
    kept.pos = pos;
    out.push_back(std::move(kept));
  }
  return out;
}

bool SubCorpus::empty() const { return token_count() == 0; }

std::size_t SubCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.tokens.size();
  return n;
}

namespace {

Document preprocess_record(const MerchantRecord& rec, const PreprocessOptions& options) {
  static const StopwordSet kNoStopwords;
  static const PassthroughPosProvider kPassthrough;
  const StopwordSet& stop = options.stopwords ? *options.stopwords : kNoStopwords;
  const PosProvider& pos = options.pos_provider ? *options.pos_provider : kPassthrough;
  const GenericWordFilter* filter = nullptr;
  if (options.filters != nullptr) {
    if (auto it = options.filters->find(rec.macro_category); it != options.filters->end()) {
      filter = &it->second;
    }
  }
  Document doc;
  doc.merchant_id = rec.merchant_id;
  auto tokens = tokenize(rec.description);
  doc.sentence_count = tokens.empty() ? 0 : tokens.back().sentence_index + 1;
  doc.tokens = preprocess(tokens, stop, pos, filter);
  return doc;
}

}  // namespace

std::vector<Document> preprocess_records(const std::vector<MerchantRecord>& records,
                                         const PreprocessOptions& options) {
  std::vector<Document> docs(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    docs[static_cast<std::size_t>(i)] = preprocess_record(records[static_cast<std::size_t>(i)], options);
  }
  return docs;
}

std::vector<Document> preprocess_records_serial(const std::vector<MerchantRecord>& records,
                                                const PreprocessOptions& options) {
  std::vector<Document> docs;
  docs.reserve(records.size());
  for (const auto& rec : records) docs.push_back(preprocess_record(rec, options));
  return docs;
}

std::vector<SubCorpus> group_by_micro(const std::vector<MerchantRecord>& records,
                                      const std::vector<Document>& documents) {
  std::vector<SubCorpus> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!rec.has_description()) continue;
    auto [it, inserted] = index.emplace(rec.micro_category, groups.size());
    if (inserted) {
      SubCorpus sc;
      sc.macro_category = rec.macro_category;
      sc.micro_category = rec.micro_category;
      groups.push_back(std::move(sc));
    }
    auto& sc = groups[it->second];
    for (const auto& t : documents[i].tokens) ++sc.vocabulary[t.normalized];
    sc.documents.push_back(documents[i]);
  }
  return groups;
}

std::vector<SubCorpus> build_subcorpora(const std::vector<MerchantRecord>& records,
                                        const PreprocessOptions& options) {
  return group_by_micro(records, preprocess_records(records, options));
}

GenericWordFilter build_generic_filter(const std::string& macro_category,
                                       const std::vector<SubCorpus>& macro_corpus,
                                       const CandidateSelector& select_candidates,
                                       llm::Gateway& gateway, std::vector<FilterBuildLog>* log) {
  GenericWordFilter filter;
  filter.macro_category = macro_category;
  for (const auto& sc : macro_corpus) {
    if (sc.macro_category != macro_category) continue;
    if (sc.empty()) {
      throw Error(ErrorCode::EmptyCorpus,
                  fmt::format("micro category '{}' is empty after filtering", sc.micro_category));
    }
    const auto candidates = select_candidates(sc);
    FilterBuildLog entry;
    entry.micro_category = sc.micro_category;
    entry.candidate_count = candidates.size();
    if (!candidates.empty()) {
      const auto prompt = llm::render(llm::TemplateId::SeparateTerms,
                                      {{"words_list", candidates}, {"type", sc.micro_category}});
      const auto exchange = gateway.complete(prompt);
      const auto groups = llm::parse_separation(exchange.raw_reply, candidates);
      for (const auto& w : groups.unrelated) filter.insert(w);
      entry.unrelated = groups.unrelated;
    }
    if (log != nullptr) log->push_back(std::move(entry));
  }
  return filter;
}

}  // namespace taxo::corpus
