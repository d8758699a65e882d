#include "taxo/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/text.hpp"

namespace taxo::keywords {

namespace {

using corpus::Document;
using corpus::SubCorpus;
using corpus::Token;

enum class Casing { Plain, Upper, Acronym };

Casing casing_of(const Token& t) {
  const auto cps = text::decode_utf8(t.surface);
  std::size_t letters = 0;
  std::size_t upper = 0;
  for (char32_t c : cps) {
    if (!text::is_letter(c)) continue;
    ++letters;
    if (text::is_upper(c)) ++upper;
  }
  if (letters >= 2 && upper == letters) return Casing::Acronym;
  if (!cps.empty() && text::is_upper(cps.front()) && t.position_in_sentence != 0) return Casing::Upper;
  return Casing::Plain;
}

/// Slices [begin, end) of a document's token list sharing one sentence.
std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(const Document& doc) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t i = 0;
  while (i < doc.tokens.size()) {
    std::size_t j = i + 1;
    while (j < doc.tokens.size() && doc.tokens[j].sentence_index == doc.tokens[i].sentence_index) ++j;
    spans.emplace_back(i, j);
    i = j;
  }
  return spans;
}

double median(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return v[n / 2];
  return (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
}

struct Accumulator {
  std::size_t tf = 0;
  std::size_t upper = 0;
  std::size_t acronym = 0;
  std::vector<std::uint32_t> sentences;
  std::map<std::string, std::size_t> left;
  std::map<std::string, std::size_t> right;

  void merge(Accumulator&& other) {
    tf += other.tf;
    upper += other.upper;
    acronym += other.acronym;
    sentences.insert(sentences.end(), other.sentences.begin(), other.sentences.end());
    for (auto& [k, v] : other.left) left[k] += v;
    for (auto& [k, v] : other.right) right[k] += v;
  }
};

using Partial = std::map<std::string, Accumulator>;

Partial accumulate_document(const Document& doc, std::uint32_t sentence_offset, std::size_t window) {
  Partial part;
  for (const auto& [b, e] : sentence_spans(doc)) {
    for (std::size_t i = b; i < e; ++i) {
      const Token& t = doc.tokens[i];
      auto& acc = part[t.normalized];
      ++acc.tf;
      switch (casing_of(t)) {
        case Casing::Acronym: ++acc.acronym; break;
        case Casing::Upper: ++acc.upper; break;
        case Casing::Plain: break;
      }
      acc.sentences.push_back(sentence_offset + t.sentence_index);
      for (std::size_t j = b; j < e; ++j) {
        if (j == i) continue;
        const Token& u = doc.tokens[j];
        if (u.position_in_sentence < t.position_in_sentence &&
            t.position_in_sentence - u.position_in_sentence <= window) {
          ++acc.left[u.normalized];
        } else if (u.position_in_sentence > t.position_in_sentence &&
                   u.position_in_sentence - t.position_in_sentence <= window) {
          ++acc.right[u.normalized];
        }
      }
    }
  }
  return part;
}

Statistics finish(Partial&& merged, std::size_t n_sentences) {
  Statistics out;
  for (auto& [term, acc] : merged) {
    TermStatistics s;
    s.term = term;
    s.tf = acc.tf;
    s.tf_upper = acc.upper;
    s.tf_acronym = acc.acronym;
    s.sentence_frequency = std::set<std::uint32_t>(acc.sentences.begin(), acc.sentences.end()).size();
    s.median_sentence_index = median(std::move(acc.sentences));
    s.left_distinct = acc.left.size();
    for (const auto& [k, v] : acc.left) s.left_total += v;
    s.right_distinct = acc.right.size();
    for (const auto& [k, v] : acc.right) s.right_total += v;
    out.terms.emplace(term, std::move(s));
  }
  double sum = 0.0;
  double max_tf = 0.0;
  for (const auto& [k, s] : out.terms) {
    sum += static_cast<double>(s.tf);
    max_tf = std::max(max_tf, static_cast<double>(s.tf));
  }
  const double n = static_cast<double>(out.terms.size());
  const double mean = sum / n;
  double var = 0.0;
  for (const auto& [k, s] : out.terms) {
    const double d = static_cast<double>(s.tf) - mean;
    var += d * d;
  }
  out.aggregates.mean_tf = mean;
  out.aggregates.std_tf = std::sqrt(var / n);
  out.aggregates.max_tf = max_tf;
  out.aggregates.n_sentences = static_cast<double>(n_sentences);
  return out;
}

std::vector<std::uint32_t> sentence_offsets(const SubCorpus& sc, std::size_t& total) {
  std::vector<std::uint32_t> offsets;
  offsets.reserve(sc.documents.size());
  std::uint32_t acc = 0;
  for (const auto& d : sc.documents) {
    offsets.push_back(acc);
    acc += d.sentence_count;
  }
  total = acc;
  return offsets;
}

void require_tokens(const SubCorpus& sc) {
  if (sc.empty()) throw Error(ErrorCode::EmptyCorpus, "sub-corpus '" + sc.micro_category + "' has no tokens");
}

}  // namespace

Statistics collect_statistics(const SubCorpus& subcorpus, std::size_t cooccur_window) {
  require_tokens(subcorpus);
  std::size_t total = 0;
  const auto offsets = sentence_offsets(subcorpus, total);
  std::vector<Partial> partials(subcorpus.documents.size());
  const auto n = static_cast<std::ptrdiff_t>(subcorpus.documents.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t d = 0; d < n; ++d) {
    const auto i = static_cast<std::size_t>(d);
    partials[i] = accumulate_document(subcorpus.documents[i], offsets[i], cooccur_window);
  }
  Partial merged;
  for (auto& p : partials) {
    for (auto& [term, acc] : p) merged[term].merge(std::move(acc));
  }
  return finish(std::move(merged), total);
}

Statistics collect_statistics_serial(const SubCorpus& subcorpus, std::size_t cooccur_window) {
  require_tokens(subcorpus);
  // Flatten into one token stream with global sentence numbers, then count
  // directly over it.
  struct Flat {
    const Token* token;
    std::uint32_t sentence;
  };
  std::vector<Flat> flat;
  std::uint32_t offset = 0;
  for (const auto& d : subcorpus.documents) {
    for (const auto& t : d.tokens) flat.push_back({&t, offset + t.sentence_index});
    offset += d.sentence_count;
  }
  Partial merged;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const Token& t = *flat[i].token;
    auto& acc = merged[t.normalized];
    ++acc.tf;
    const Casing c = casing_of(t);
    if (c == Casing::Acronym) ++acc.acronym;
    if (c == Casing::Upper) ++acc.upper;
    acc.sentences.push_back(flat[i].sentence);
    for (std::size_t j = i; j-- > 0 && flat[j].sentence == flat[i].sentence;) {
      const auto gap = t.position_in_sentence - flat[j].token->position_in_sentence;
      if (gap <= cooccur_window) ++acc.left[flat[j].token->normalized];
    }
    for (std::size_t j = i + 1; j < flat.size() && flat[j].sentence == flat[i].sentence; ++j) {
      const auto gap = flat[j].token->position_in_sentence - t.position_in_sentence;
      if (gap <= cooccur_window) ++acc.right[flat[j].token->normalized];
    }
  }
  return finish(std::move(merged), offset);
}

double score_unigram(const TermStatistics& s, const CorpusAggregates& agg) {
  const double tf = static_cast<double>(s.tf);
  const double w_case =
      static_cast<double>(std::max(s.tf_upper, s.tf_acronym)) / (1.0 + std::log(tf));
  const double w_pos = std::log(std::log(3.0 + s.median_sentence_index));
  const double w_freq = tf / (agg.mean_tf + agg.std_tf);
  const double left = s.left_total > 0 ? static_cast<double>(s.left_distinct) / static_cast<double>(s.left_total) : 0.0;
  const double right = s.right_total > 0 ? static_cast<double>(s.right_distinct) / static_cast<double>(s.right_total) : 0.0;
  const double w_rel = 1.0 + (left + right) * tf / agg.max_tf;
  const double w_sent = static_cast<double>(s.sentence_frequency) / agg.n_sentences;
  return (w_rel * w_pos) / (w_case + w_freq / w_rel + w_sent / w_rel);
}

std::vector<CandidateTerm> extract_keywords(const SubCorpus& subcorpus, const KeywordOptions& options) {
  if (options.top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  if (options.max_ngram < 1 || options.max_ngram > 5) {
    throw Error(ErrorCode::InvalidArgument, "max_ngram must be in [1, 5]");
  }
  const Statistics stats = collect_statistics(subcorpus, options.cooccur_window);
  std::map<std::string, double> unigram;
  for (const auto& [term, s] : stats.terms) unigram.emplace(term, score_unigram(s, stats.aggregates));

  // n-gram surface -> (constituents, occurrence count)
  std::map<std::string, std::pair<std::vector<std::string>, std::size_t>> ngrams;
  for (const auto& doc : subcorpus.documents) {
    for (const auto& [b, e] : sentence_spans(doc)) {
      for (std::size_t i = b; i < e; ++i) {
        std::vector<std::string> parts;
        for (std::size_t j = i; j < e && parts.size() < options.max_ngram; ++j) {
          if (j > i && doc.tokens[j].position_in_sentence != doc.tokens[j - 1].position_in_sentence + 1) {
            break;
          }
          parts.push_back(doc.tokens[j].normalized);
          auto& entry = ngrams[text::join(parts, " ")];
          if (entry.first.empty()) entry.first = parts;
          ++entry.second;
        }
      }
    }
  }

  std::vector<CandidateTerm> candidates;
  candidates.reserve(ngrams.size());
  for (const auto& [surface, entry] : ngrams) {
    double prod = 1.0;
    double sum = 0.0;
    for (const auto& w : entry.first) {
      const double s = unigram.at(w);
      prod *= s;
      sum += s;
    }
    candidates.push_back({surface, prod / (static_cast<double>(entry.second) * (1.0 + sum)), entry.second});
  }
  std::sort(candidates.begin(), candidates.end(), [](const CandidateTerm& a, const CandidateTerm& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.tf != b.tf) return a.tf > b.tf;
    return a.surface < b.surface;
  });

  std::vector<CandidateTerm> kept;
  for (auto& c : candidates) {
    if (kept.size() >= options.top_k) break;
    const bool near_duplicate = std::any_of(kept.begin(), kept.end(), [&](const CandidateTerm& k) {
      return text::levenshtein_similarity(c.surface, k.surface) >= options.dedup_threshold;
    });
    if (!near_duplicate) kept.push_back(std::move(c));
  }
  return kept;
}

void save_keywords(const std::filesystem::path& path, const std::vector<CandidateTerm>& keywords) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& k : keywords) {
    nlohmann::ordered_json o;
    o["surface"] = k.surface;
    o["score"] = k.score;
    o["tf"] = k.tf;
    arr.push_back(std::move(o));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, path.string());
  out << arr.dump(2) << '\n';
}

std::vector<CandidateTerm> load_keywords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  const auto arr = nlohmann::json::parse(in);
  std::vector<CandidateTerm> out;
  for (const auto& o : arr) {
    out.push_back({o.at("surface").get<std::string>(), o.at("score").get<double>(),
                   o.at("tf").get<std::size_t>()});
  }
  return out;
}

}  // namespace taxo::keywords
