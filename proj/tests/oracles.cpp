#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "taxo/text.hpp"

namespace oracle {

fs::path fixtures() { return TAXO_FIXTURES; }
fs::path data() { return TAXO_DATA; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- keywords

namespace {

struct FlatToken {
  std::string surface;
  std::string term;
  std::uint32_t sentence;
  std::uint32_t position;
};

std::vector<FlatToken> flatten(const taxo::corpus::SubCorpus& sc) {
  std::vector<FlatToken> out;
  std::uint32_t offset = 0;
  for (const auto& d : sc.documents) {
    for (const auto& t : d.tokens) {
      out.push_back({t.surface, t.normalized, offset + t.sentence_index, t.position_in_sentence});
    }
    offset += d.sentence_count;
  }
  return out;
}

bool all_caps(const std::string& surface) {
  int letters = 0;
  for (char32_t c : taxo::text::decode_utf8(surface)) {
    if (!taxo::text::is_letter(c)) continue;
    if (!taxo::text::is_upper(c)) return false;
    ++letters;
  }
  return letters >= 2;
}

bool capitalized(const std::string& surface) {
  const auto cps = taxo::text::decode_utf8(surface);
  return !cps.empty() && taxo::text::is_upper(cps[0]);
}

}  // namespace

std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

KeywordOracle brute_force_keywords(const taxo::corpus::SubCorpus& sc, std::size_t max_ngram,
                                   std::size_t top_k, double dedup_threshold) {
  const auto toks = flatten(sc);
  double n_sentences = 0;
  for (const auto& d : sc.documents) n_sentences += d.sentence_count;

  std::set<std::string> vocab;
  for (const auto& t : toks) vocab.insert(t.term);

  KeywordOracle out;
  for (const auto& w : vocab) {
    UnigramFeatures f;
    std::vector<double> sentences;
    std::set<double> distinct_sentences;
    std::set<std::string> left, right;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].term != w) continue;
      f.tf += 1;
      if (all_caps(toks[i].surface)) {
        f.tf_acronym += 1;
      } else if (capitalized(toks[i].surface) && toks[i].position != 0) {
        f.tf_upper += 1;
      }
      sentences.push_back(toks[i].sentence);
      distinct_sentences.insert(toks[i].sentence);
      for (std::size_t j = 0; j < toks.size(); ++j) {
        if (j == i || toks[j].sentence != toks[i].sentence) continue;
        if (toks[j].position + 1 == toks[i].position) {
          f.left_total += 1;
          left.insert(toks[j].term);
        }
        if (toks[i].position + 1 == toks[j].position) {
          f.right_total += 1;
          right.insert(toks[j].term);
        }
      }
    }
    std::sort(sentences.begin(), sentences.end());
    const std::size_t n = sentences.size();
    f.median_sentence = n % 2 ? sentences[n / 2] : (sentences[n / 2 - 1] + sentences[n / 2]) / 2;
    f.sentence_frequency = static_cast<double>(distinct_sentences.size());
    f.left_distinct = static_cast<double>(left.size());
    f.right_distinct = static_cast<double>(right.size());
    out.features[w] = f;
  }

  double mean = 0, max_tf = 0;
  for (const auto& [w, f] : out.features) {
    mean += f.tf;
    max_tf = std::max(max_tf, f.tf);
  }
  mean /= static_cast<double>(out.features.size());
  double var = 0;
  for (const auto& [w, f] : out.features) var += (f.tf - mean) * (f.tf - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.features.size()));

  for (const auto& [w, f] : out.features) {
    const double w_case = std::max(f.tf_upper, f.tf_acronym) / (1 + std::log(f.tf));
    const double w_pos = std::log(std::log(3 + f.median_sentence));
    const double w_freq = f.tf / (mean + sd);
    const double l = f.left_total > 0 ? f.left_distinct / f.left_total : 0;
    const double r = f.right_total > 0 ? f.right_distinct / f.right_total : 0;
    const double w_rel = 1 + (l + r) * f.tf / max_tf;
    const double w_sent = f.sentence_frequency / n_sentences;
    out.unigram_scores[w] = (w_rel * w_pos) / (w_case + w_freq / w_rel + w_sent / w_rel);
  }

  // Every window of 1..max_ngram tokens at consecutive positions of one sentence.
  std::map<std::string, std::pair<std::vector<std::string>, std::size_t>> grams;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    for (std::size_t len = 1; len <= max_ngram && i + len <= toks.size(); ++len) {
      bool contiguous = true;
      for (std::size_t k = 1; k < len; ++k) {
        const auto& a = toks[i + k - 1];
        const auto& b = toks[i + k];
        if (b.sentence != a.sentence || b.position != a.position + 1) contiguous = false;
      }
      if (!contiguous) break;
      std::vector<std::string> parts;
      std::string surface;
      for (std::size_t k = 0; k < len; ++k) {
        parts.push_back(toks[i + k].term);
        surface += (k ? " " : "") + toks[i + k].term;
      }
      grams[surface].first = parts;
    }
  }
  // Occurrence counts by rescanning.
  for (auto& [surface, entry] : grams) {
    const auto& parts = entry.first;
    std::size_t count = 0;
    for (std::size_t i = 0; i + parts.size() <= toks.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < parts.size() && hit; ++k) {
        const auto& t = toks[i + k];
        if (t.term != parts[k]) hit = false;
        if (k > 0 && (t.sentence != toks[i + k - 1].sentence || t.position != toks[i + k - 1].position + 1)) {
          hit = false;
        }
      }
      if (hit) ++count;
    }
    entry.second = count;
  }

  std::vector<taxo::keywords::CandidateTerm> all;
  for (const auto& [surface, entry] : grams) {
    double prod = 1, sum = 0;
    for (const auto& p : entry.first) {
      prod *= out.unigram_scores.at(p);
      sum += out.unigram_scores.at(p);
    }
    all.push_back({surface, prod / (static_cast<double>(entry.second) * (1 + sum)), entry.second});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::tie(a.score, b.tf, a.surface) < std::tie(b.score, a.tf, b.surface);
  });
  for (const auto& c : all) {
    if (out.ranking.size() == top_k) break;
    const auto cu = taxo::text::decode_utf8(c.surface);
    bool dup = false;
    for (const auto& k : out.ranking) {
      const auto ku = taxo::text::decode_utf8(k.surface);
      const double len = static_cast<double>(std::max(cu.size(), ku.size()));
      if (1.0 - static_cast<double>(edit_distance(cu, ku)) / len >= dedup_threshold) dup = true;
    }
    if (!dup) out.ranking.push_back(c);
  }
  return out;
}

// --------------------------------------------------------------------- lda

SyntheticCorpus two_cluster_corpus(std::size_t docs, std::uint64_t seed) {
  SyntheticCorpus sc;
  const std::vector<std::string> a{"massa", "forno", "queijo", "tomate", "manjericao",
                                   "calabresa", "borda", "fatia", "molho", "oregano"};
  const std::vector<std::string> b{"camisa", "tecido", "algodao", "manga", "gola",
                                   "botao", "costura", "estampa", "tamanho", "bolso"};
  sc.vocabulary = a;
  sc.vocabulary.insert(sc.vocabulary.end(), b.begin(), b.end());
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, 9);
  std::uniform_int_distribution<int> extra(10, 25);
  for (std::size_t d = 0; d < docs; ++d) {
    const int c = static_cast<int>(d % 2);
    const std::uint32_t base = c == 0 ? 0 : 10;
    taxo::lda::EncodedDoc doc;
    for (std::uint32_t w = 0; w < 10; ++w) doc.push_back(base + w);
    for (int i = extra(gen); i > 0; --i) doc.push_back(base + pick(gen));
    std::shuffle(doc.begin(), doc.end(), gen);
    sc.docs.push_back(std::move(doc));
    sc.cluster.push_back(c);
  }
  return sc;
}

double purity(const taxo::lda::LdaModel& model, const std::vector<int>& cluster) {
  std::map<std::uint32_t, std::map<int, std::size_t>> table;
  for (std::size_t d = 0; d < cluster.size(); ++d) ++table[model.dominant_topic(d)][cluster[d]];
  std::size_t agree = 0;
  for (const auto& [topic, counts] : table) {
    std::size_t best = 0;
    for (const auto& [c, n] : counts) best = std::max(best, n);
    agree += best;
  }
  return static_cast<double>(agree) / static_cast<double>(cluster.size());
}

std::string count_invariant_violation(const taxo::lda::LdaModel& m,
                                      const std::vector<taxo::lda::EncodedDoc>& docs) {
  std::uint64_t tokens = 0;
  std::vector<std::uint64_t> word_totals(m.vocab_size(), 0);
  for (const auto& d : docs) {
    tokens += d.size();
    for (auto w : d) ++word_totals[w];
  }
  std::uint64_t sum_totals = 0;
  for (std::uint32_t k = 0; k < m.k; ++k) {
    std::uint64_t row = 0;
    for (auto c : m.topic_word_counts[k]) row += c;
    if (row != m.topic_totals[k]) return "topic " + std::to_string(k) + " row sum != topic total";
    std::uint64_t col = 0;
    for (const auto& d : m.doc_topic_counts) col += d[k];
    if (col != m.topic_totals[k]) return "topic " + std::to_string(k) + " doc column sum != topic total";
    sum_totals += row;
    double phi_sum = 0;
    for (std::uint32_t w = 0; w < m.vocab_size(); ++w) phi_sum += m.phi(k, w);
    if (std::abs(phi_sum - 1.0) > 1e-9) return "phi row " + std::to_string(k) + " sums to " + std::to_string(phi_sum);
  }
  if (sum_totals != tokens) return "assigned tokens != corpus tokens";
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::uint64_t row = 0;
    for (auto c : m.doc_topic_counts[d]) row += c;
    if (row != docs[d].size()) return "doc " + std::to_string(d) + " length mismatch";
  }
  for (std::uint32_t w = 0; w < m.vocab_size(); ++w) {
    std::uint64_t col = 0;
    for (std::uint32_t k = 0; k < m.k; ++k) col += m.topic_word_counts[k][w];
    if (col != word_totals[w]) return "word " + std::to_string(w) + " count not conserved";
  }
  return {};
}

bool single_topic_matches_unigram(const taxo::lda::LdaModel& m,
                                  const std::vector<taxo::lda::EncodedDoc>& docs) {
  if (m.k != 1) return false;
  std::vector<std::uint64_t> c(m.vocab_size(), 0);
  std::uint64_t n = 0;
  for (const auto& d : docs) {
    for (auto w : d) ++c[w];
    n += d.size();
  }
  const std::uint64_t nk = m.topic_totals[0];
  for (std::uint32_t w = 0; w < m.vocab_size(); ++w) {
    if (static_cast<std::uint64_t>(m.topic_word_counts[0][w]) * n != c[w] * nk) return false;
  }
  return nk == n;
}

// ----------------------------------------------------------------- tagging

std::vector<taxo::tagger::Tag> scan_tags(const std::string& description,
                                         const taxo::taxonomy::Taxonomy& tax, bool leaves_only) {
  const std::string padded = " " + taxo::text::join(taxo::text::word_tokens(description), " ") + " ";
  std::set<std::string> seen_keys;
  std::vector<taxo::tagger::Tag> tags;
  for (const auto& node : tax.nodes) {
    if (node.id == tax.root_id || (leaves_only && !node.children.empty())) continue;
    const auto key = taxo::text::join(taxo::text::word_tokens(node.label), " ");
    if (key.empty() || !seen_keys.insert(key).second) continue;
    const auto pos = padded.find(" " + key + " ");
    if (pos == std::string::npos) continue;
    const auto offset = static_cast<std::size_t>(std::count(padded.begin(), padded.begin() + pos, ' '));
    tags.push_back({node.id, node.label, offset});
  }
  std::sort(tags.begin(), tags.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first_match_offset, a.label) < std::tie(b.first_match_offset, b.label);
  });
  return tags;
}

// ----------------------------------------------------------------- semeval

EdgeListSummary toposort_edges(const fs::path& path) {
  std::ifstream in(path);
  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, int> indegree;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, child, parent;
    std::getline(ss, id, '\t');
    std::getline(ss, child, '\t');
    std::getline(ss, parent, '\t');
    children[parent].push_back(child);
    indegree[parent] += 0;
    indegree[child] += 1;
  }
  EdgeListSummary s;
  s.nodes = indegree.size();
  std::queue<std::pair<std::string, std::size_t>> q;
  for (const auto& [n, deg] : indegree) {
    if (deg == 0) {
      s.root = n;
      q.push({n, 0});
    }
  }
  std::size_t visited = 0;
  while (!q.empty()) {
    auto [n, depth] = q.front();
    q.pop();
    ++visited;
    s.max_depth = std::max(s.max_depth, depth);
    if (children[n].empty()) ++s.leaves;
    for (const auto& c : children[n]) {
      if (--indegree[c] == 0) q.push({c, depth + 1});
    }
  }
  s.acyclic = visited == s.nodes;
  return s;
}

// ---------------------------------------------------------------- pipeline

taxo::pipeline::PipelineConfig toy_config(const fs::path& output, const fs::path& cache) {
  auto c = taxo::pipeline::load_config(data() / "toy/toy.ini");
  c.output_dir = output;
  c.cache_dir = cache;
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.emplace(fs::relative(e.path(), root).generic_string(), read_file(e.path()));
  }
  return out;
}

}  // namespace oracle
