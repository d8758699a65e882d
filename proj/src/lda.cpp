#include "taxo/lda.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/rng.hpp"

namespace taxo::lda {

std::uint32_t Dictionary::intern(const std::string& token) {
  auto [it, inserted] = index.emplace(token, static_cast<std::uint32_t>(entries.size()));
  if (inserted) entries.push_back(token);
  return it->second;
}

namespace {

bool adjacent(const corpus::Token& a, const corpus::Token& b) {
  return a.sentence_index == b.sentence_index && b.position_in_sentence == a.position_in_sentence + 1;
}

std::string bigram_of(const corpus::Token& a, const corpus::Token& b) {
  return a.normalized + "_" + b.normalized;
}

}  // namespace

EncodedCorpus build_dictionary(const corpus::SubCorpus& subcorpus, std::size_t min_bigram_count) {
  if (subcorpus.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "sub-corpus '" + subcorpus.micro_category + "' has no tokens");
  }
  std::map<std::string, std::size_t> bigram_counts;
  for (const auto& doc : subcorpus.documents) {
    for (std::size_t i = 0; i + 1 < doc.tokens.size(); ++i) {
      if (adjacent(doc.tokens[i], doc.tokens[i + 1])) ++bigram_counts[bigram_of(doc.tokens[i], doc.tokens[i + 1])];
    }
  }
  EncodedCorpus out;
  for (std::size_t d = 0; d < subcorpus.documents.size(); ++d) {
    const auto& tokens = subcorpus.documents[d].tokens;
    if (tokens.empty()) continue;
    EncodedDoc enc;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      enc.push_back(out.dictionary.intern(tokens[i].normalized));
      if (i + 1 < tokens.size() && adjacent(tokens[i], tokens[i + 1])) {
        const auto bg = bigram_of(tokens[i], tokens[i + 1]);
        if (bigram_counts[bg] >= min_bigram_count) enc.push_back(out.dictionary.intern(bg));
      }
    }
    out.docs.push_back(std::move(enc));
    out.source_document.push_back(d);
  }
  return out;
}

double LdaModel::phi(std::uint32_t topic, std::uint32_t word) const {
  const double v = static_cast<double>(vocab_size());
  return (static_cast<double>(topic_word_counts[topic][word]) + beta) /
         (static_cast<double>(topic_totals[topic]) + v * beta);
}

std::uint32_t LdaModel::dominant_topic(std::size_t doc) const {
  const auto& row = doc_topic_counts.at(doc);
  return static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void LdaModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["seed"] = seed;
  j["dictionary"] = vocabulary;
  j["topic_word_counts"] = topic_word_counts;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, path.string());
  out << j.dump() << '\n';
}

LdaModel LdaModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  const auto j = nlohmann::json::parse(in);
  LdaModel m;
  m.k = j.at("k").get<std::uint32_t>();
  m.alpha = j.at("alpha").get<std::vector<double>>();
  m.beta = j.at("beta").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.vocabulary = j.at("dictionary").get<std::vector<std::string>>();
  m.topic_word_counts = j.at("topic_word_counts").get<std::vector<std::vector<std::uint32_t>>>();
  m.topic_totals.assign(m.k, 0);
  for (std::uint32_t t = 0; t < m.k; ++t) {
    for (auto c : m.topic_word_counts.at(t)) m.topic_totals[t] += c;
  }
  return m;
}

std::vector<double> minka_update(const std::vector<std::vector<std::uint32_t>>& doc_topic_counts,
                                 std::vector<double> alpha, int iterations) {
  using boost::math::digamma;
  const std::size_t k = alpha.size();
  std::vector<double> doc_len(doc_topic_counts.size());
  for (std::size_t d = 0; d < doc_topic_counts.size(); ++d) {
    doc_len[d] = std::accumulate(doc_topic_counts[d].begin(), doc_topic_counts[d].end(), 0.0);
  }
  for (int it = 0; it < iterations; ++it) {
    const double alpha0 = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double denom = 0.0;
    for (double len : doc_len) denom += digamma(len + alpha0) - digamma(alpha0);
    if (denom <= 0.0) break;
    std::vector<double> next(k);
    for (std::size_t t = 0; t < k; ++t) {
      double num = 0.0;
      const double psi_a = digamma(alpha[t]);
      for (const auto& row : doc_topic_counts) {
        if (row[t] > 0) num += digamma(static_cast<double>(row[t]) + alpha[t]) - psi_a;
      }
      next[t] = std::max(1e-8, alpha[t] * num / denom);
    }
    alpha = std::move(next);
  }
  return alpha;
}

LdaModel gibbs_train(const std::vector<EncodedDoc>& docs, const std::vector<std::string>& vocabulary,
                     std::uint32_t k, std::uint64_t seed, const GibbsOptions& options,
                     const SweepObserver& observer) {
  if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1");
  if (vocabulary.empty()) throw Error(ErrorCode::EmptyCorpus, "empty vocabulary");
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) throw Error(ErrorCode::EmptyDocument, "document " + std::to_string(d));
  }
  const std::uint32_t v = static_cast<std::uint32_t>(vocabulary.size());

  LdaModel m;
  m.k = k;
  m.alpha.assign(k, options.alpha_init);
  m.beta = options.beta;
  m.seed = seed;
  m.vocabulary = vocabulary;
  m.topic_word_counts.assign(k, std::vector<std::uint32_t>(v, 0));
  m.doc_topic_counts.assign(docs.size(), std::vector<std::uint32_t>(k, 0));
  m.topic_totals.assign(k, 0);

  Xoshiro256 rng(seed);
  std::vector<std::vector<std::uint32_t>> z(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto t = static_cast<std::uint32_t>(rng.below(k));
      const auto w = docs[d][i];
      if (w >= v) throw Error(ErrorCode::InvalidArgument, "word id out of range");
      z[d][i] = t;
      ++m.topic_word_counts[t][w];
      ++m.doc_topic_counts[d][t];
      ++m.topic_totals[t];
    }
  }

  const double v_beta = static_cast<double>(v) * m.beta;
  std::vector<double> cumulative(k);
  for (int sweep = 1; sweep <= options.sweeps; ++sweep) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto& dt = m.doc_topic_counts[d];
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const auto w = docs[d][i];
        const auto old = z[d][i];
        --m.topic_word_counts[old][w];
        --dt[old];
        --m.topic_totals[old];
        double total = 0.0;
        for (std::uint32_t t = 0; t < k; ++t) {
          total += (static_cast<double>(dt[t]) + m.alpha[t]) *
                   (static_cast<double>(m.topic_word_counts[t][w]) + m.beta) /
                   (static_cast<double>(m.topic_totals[t]) + v_beta);
          cumulative[t] = total;
        }
        const double u = rng.uniform01() * total;
        std::uint32_t chosen = k - 1;
        for (std::uint32_t t = 0; t < k; ++t) {
          if (u < cumulative[t]) {
            chosen = t;
            break;
          }
        }
        z[d][i] = chosen;
        ++m.topic_word_counts[chosen][w];
        ++dt[chosen];
        ++m.topic_totals[chosen];
      }
    }
    if (sweep > options.burn_in && options.hyper_update_every > 0 &&
        (sweep - options.burn_in) % options.hyper_update_every == 0 && k > 1) {
      m.alpha = minka_update(m.doc_topic_counts, std::move(m.alpha), options.minka_iterations);
    }
    if (observer) observer(m, sweep);
  }
  return m;
}

std::vector<std::uint32_t> top_words(const LdaModel& model, std::uint32_t topic, std::size_t top_n) {
  std::vector<std::uint32_t> words;
  for (std::uint32_t w = 0; w < model.vocab_size(); ++w) {
    if (model.topic_word_counts[topic][w] > 0) words.push_back(w);
  }
  std::stable_sort(words.begin(), words.end(), [&](std::uint32_t a, std::uint32_t b) {
    return model.topic_word_counts[topic][a] > model.topic_word_counts[topic][b];
  });
  if (words.size() > top_n) words.resize(top_n);
  return words;
}

Coherence umass_coherence(const LdaModel& model, const std::vector<EncodedDoc>& docs, std::size_t top_n) {
  std::vector<std::vector<std::uint32_t>> doc_sets;
  doc_sets.reserve(docs.size());
  for (const auto& d : docs) {
    std::vector<std::uint32_t> s(d.begin(), d.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    doc_sets.push_back(std::move(s));
  }
  auto contains = [](const std::vector<std::uint32_t>& s, std::uint32_t w) {
    return std::binary_search(s.begin(), s.end(), w);
  };
  Coherence out;
  for (std::uint32_t t = 0; t < model.k; ++t) {
    const auto words = top_words(model, t, top_n);
    double c = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      std::size_t df = 0;
      for (const auto& s : doc_sets) df += contains(s, words[i]) ? 1 : 0;
      if (df == 0) continue;
      for (std::size_t j = i + 1; j < words.size(); ++j) {
        std::size_t co = 0;
        for (const auto& s : doc_sets) co += (contains(s, words[i]) && contains(s, words[j])) ? 1 : 0;
        c += std::log((static_cast<double>(co) + 1.0) / static_cast<double>(df));
      }
    }
    out.per_topic.push_back(c);
  }
  out.mean = out.per_topic.empty()
                 ? 0.0
                 : std::accumulate(out.per_topic.begin(), out.per_topic.end(), 0.0) /
                       static_cast<double>(out.per_topic.size());
  return out;
}

namespace {

Selection pick_best(std::vector<LdaModel>&& models, std::vector<double>&& means,
                    const std::vector<std::uint32_t>& ks) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (means[i] > means[best] || (means[i] == means[best] && ks[i] < ks[best])) best = i;
  }
  Selection s;
  s.model = std::move(models[best]);
  s.ks = ks;
  s.mean_coherence = std::move(means);
  return s;
}

void require_range(const std::vector<std::uint32_t>& k_range) {
  if (k_range.empty()) throw Error(ErrorCode::InvalidArgument, "empty k range");
}

}  // namespace

Selection select_topic_count(const std::vector<EncodedDoc>& docs,
                             const std::vector<std::string>& vocabulary,
                             const std::vector<std::uint32_t>& k_range, std::uint64_t seed,
                             const GibbsOptions& options, std::size_t coherence_top_n) {
  require_range(k_range);
  const auto n = static_cast<std::ptrdiff_t>(k_range.size());
  std::vector<LdaModel> models(k_range.size());
  std::vector<double> means(k_range.size());
  std::vector<std::exception_ptr> errors(k_range.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      models[idx] = gibbs_train(docs, vocabulary, k_range[idx], seed + k_range[idx], options);
      means[idx] = umass_coherence(models[idx], docs, coherence_top_n).mean;
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return pick_best(std::move(models), std::move(means), k_range);
}

Selection select_topic_count_serial(const std::vector<EncodedDoc>& docs,
                                    const std::vector<std::string>& vocabulary,
                                    const std::vector<std::uint32_t>& k_range, std::uint64_t seed,
                                    const GibbsOptions& options, std::size_t coherence_top_n) {
  require_range(k_range);
  std::vector<LdaModel> models;
  std::vector<double> means;
  for (auto k : k_range) {
    models.push_back(gibbs_train(docs, vocabulary, k, seed + k, options));
    means.push_back(umass_coherence(models.back(), docs, coherence_top_n).mean);
  }
  return pick_best(std::move(models), std::move(means), k_range);
}

std::vector<TopicTermList> topic_terms(const LdaModel& model, std::size_t raw_top, double keep_fraction) {
  std::vector<TopicTermList> out;
  const std::uint32_t v = model.vocab_size();
  for (std::uint32_t t = 0; t < model.k; ++t) {
    std::vector<std::uint32_t> order(v);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return model.topic_word_counts[t][a] > model.topic_word_counts[t][b];
    });
    const std::size_t ranked = std::min<std::size_t>(raw_top, v);
    const auto keep = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(ranked) - 1e-9));
    TopicTermList list;
    list.topic_id = t;
    for (std::size_t i = 0; i < std::min(keep, ranked); ++i) {
      std::string surface = model.vocabulary[order[i]];
      std::replace(surface.begin(), surface.end(), '_', ' ');
      list.terms.emplace_back(std::move(surface), model.phi(t, order[i]));
    }
    out.push_back(std::move(list));
  }
  return out;
}

}  // namespace taxo::lda
