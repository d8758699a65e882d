#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace taxo::llm {
class Gateway;
}

namespace taxo::corpus {

struct MerchantRecord {
  std::string merchant_id;
  std::string merchant_name;
  std::string macro_category;
  std::string micro_category;
  std::string description;
  std::uint64_t transaction_count = 0;

  /// Rows with an empty description are kept but contribute no tokens.
  bool has_description() const;
};

enum class InputFormat { Csv, Jsonl };

InputFormat format_from_path(const std::filesystem::path& path);

/// Reads merchant rows in file order. When a macro category holds more than
/// `max_merchants_per_macro` rows, only the top rows by transaction count
/// (ties by merchant_id) are kept; the survivors stay in file order.
std::vector<MerchantRecord> ingest_merchants(const std::filesystem::path& path, InputFormat format,
                                             std::size_t max_merchants_per_macro = 50000);

/// Universal POS categories, plus the legacy CONJ label and UNKNOWN.
enum class Pos {
  ADJ, ADP, ADV, AUX, CCONJ, CONJ, DET, INTJ, NOUN, NUM, PART, PRON, PROPN, PUNCT, SCONJ, SYM,
  VERB, X, UNKNOWN
};

std::string_view to_string(Pos pos);
std::optional<Pos> parse_pos(std::string_view label);
/// Categories dropped during preprocessing.
bool is_removed_category(Pos pos);

struct Token {
  std::string surface;
  std::string normalized;
  std::uint32_t sentence_index = 0;
  std::uint32_t position_in_sentence = 0;
  Pos pos = Pos::UNKNOWN;

  bool operator==(const Token&) const = default;
};

/// Sentences end at '.', '!', '?' or newline; a token is a maximal run of
/// letters, digits and hyphens. Sentences without tokens are not counted.
/// Phrase punctuation (commas, colons, brackets, quotes) skips one position,
/// so tokens on either side are not adjacent.
std::vector<Token> tokenize(std::string_view description);

class PosProvider {
public:
  virtual ~PosProvider() = default;
  virtual Pos tag(const Token& token) const = 0;
};

/// Tags everything NOUN, so preprocessing only removes stop words.
class PassthroughPosProvider final : public PosProvider {
public:
  Pos tag(const Token&) const override { return Pos::NOUN; }
};

/// `word<TAB>POS` lexicon. A word listed with several tags gets the one listed
/// most often (first wins on ties); unlisted words fall back to NOUN.
class LexiconPosProvider final : public PosProvider {
public:
  static LexiconPosProvider load(const std::filesystem::path& path);
  void add(std::string_view word, Pos pos);
  Pos tag(const Token& token) const override;
  std::size_t size() const { return best_.size(); }

private:
  void finalize(const std::string& key);
  std::unordered_map<std::string, std::vector<std::pair<Pos, int>>> counts_;
  std::unordered_map<std::string, Pos> best_;
};

class StopwordSet {
public:
  StopwordSet() = default;
  explicit StopwordSet(const std::vector<std::string>& words);
  static StopwordSet load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }

private:
  std::unordered_set<std::string> words_;
};

struct GenericWordFilter {
  std::string macro_category;
  std::set<std::string> words;

  void insert(std::string_view word);
  bool contains(std::string_view word) const;

  /// Sorted, one normalized word per line.
  void save(const std::filesystem::path& path) const;
  static GenericWordFilter load(const std::filesystem::path& path, std::string macro_category);
};

/// Drops stop words, removed POS categories and generic-filter words. The
/// survivors keep their original sentence/position metadata and get `pos`
/// set from the provider.
std::vector<Token> preprocess(const std::vector<Token>& tokens, const StopwordSet& stopwords,
                              const PosProvider& pos_provider,
                              const GenericWordFilter* filter = nullptr);

struct Document {
  std::string merchant_id;
  std::vector<Token> tokens;
  /// Number of sentences produced by the tokenizer, including those whose
  /// tokens were all removed.
  std::uint32_t sentence_count = 0;
};

struct SubCorpus {
  std::string macro_category;
  std::string micro_category;
  std::vector<Document> documents;
  std::map<std::string, std::size_t> vocabulary;

  bool empty() const;
  std::size_t token_count() const;
};

struct PreprocessOptions {
  const StopwordSet* stopwords = nullptr;
  const PosProvider* pos_provider = nullptr;
  /// Generic filters keyed by macro category; may be null.
  const std::map<std::string, GenericWordFilter>* filters = nullptr;
};

/// Tokenizes and preprocesses every record with a description.
/// OpenMP-parallel over records; output order is record order.
std::vector<Document> preprocess_records(const std::vector<MerchantRecord>& records,
                                         const PreprocessOptions& options);
/// Serial reference for preprocess_records.
std::vector<Document> preprocess_records_serial(const std::vector<MerchantRecord>& records,
                                                const PreprocessOptions& options);

/// Groups preprocessed documents into one SubCorpus per micro category,
/// in first-seen order. Records without description are skipped.
std::vector<SubCorpus> group_by_micro(const std::vector<MerchantRecord>& records,
                                      const std::vector<Document>& documents);

std::vector<SubCorpus> build_subcorpora(const std::vector<MerchantRecord>& records,
                                        const PreprocessOptions& options);

/// Proposes candidate terms for a sub-corpus (keywords and topic terms).
using CandidateSelector = std::function<std::vector<std::string>(const SubCorpus&)>;

struct FilterBuildLog {
  std::string micro_category;
  std::size_t candidate_count = 0;
  std::vector<std::string> unrelated;
};

/// For each micro category of one macro category: select candidates, ask the
/// LLM to separate them by relatedness to the micro category, and collect the
/// unrelated group. Returns the union.
GenericWordFilter build_generic_filter(const std::string& macro_category,
                                       const std::vector<SubCorpus>& macro_corpus,
                                       const CandidateSelector& select_candidates,
                                       llm::Gateway& gateway,
                                       std::vector<FilterBuildLog>* log = nullptr);

}  // namespace taxo::corpus
