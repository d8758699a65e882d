#include "taxo/llm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/hash.hpp"
#include "taxo/text.hpp"

namespace taxo::llm {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Templates

std::string_view template_text(TemplateId id) {
  switch (id) {
    case TemplateId::SeparateTerms:
      return "Given the terms in the following list: <words_list>. Separate them into two groups. "
             "In group 1 the terms with no relation to the topic <type>. And in group 2 the terms "
             "that are related.";
    case TemplateId::BuildHierarchy:
      return "Create a dictionary by hierarchically arranging the following words: <words_list>. "
             "Use JSON format as the output such as the following: {\"key\": [\"list of words\"]}";
    case TemplateId::ParentQuery:
      return "Who is the father of <new_term>?";
    case TemplateId::TaxonomyContext:
      return "Childs of <node>: [<children>]";
  }
  return {};
}

std::string render(TemplateId id, const Bindings& bindings) {
  const std::string_view tpl = template_text(id);
  const std::string_view list_sep = id == TemplateId::TaxonomyContext ? "," : ", ";
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '<') {
      const auto close = tpl.find('>', i + 1);
      if (close != std::string_view::npos) {
        const auto name = tpl.substr(i + 1, close - i - 1);
        const bool is_name = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
          return (c >= 'a' && c <= 'z') || c == '_';
        });
        if (is_name) {
          auto it = bindings.find(std::string(name));
          if (it == bindings.end()) throw Error(ErrorCode::UnboundPlaceholder, std::string(name));
          if (const auto* s = std::get_if<std::string>(&it->second)) {
            out += *s;
          } else {
            out += text::join(std::get<std::vector<std::string>>(it->second), list_sep);
          }
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i]);
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock provider

MockProvider::MockProvider(std::vector<MockEntry> entries, std::string id, std::string model)
    : entries_(std::move(entries)), id_(std::move(id)), model_(std::move(model)) {
  failures_left_.reserve(entries_.size());
  for (const auto& e : entries_) failures_left_.push_back(std::max(0, e.fail_times));
}

std::shared_ptr<MockProvider> MockProvider::load(const std::filesystem::path& script,
                                                 std::string id) {
  std::ifstream in(script, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, script.string());
  std::ostringstream contents;
  contents << in.rdbuf();
  json j;
  try {
    j = json::parse(contents.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedLine, script.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::MalformedStructure, script.string() + ": expected list");
  std::vector<MockEntry> entries;
  for (const auto& item : j) {
    MockEntry e;
    e.match = item.value("match", std::string{});
    e.reply = item.value("reply", std::string{});
    e.fail_times = item.value("fail_times", 0);
    entries.push_back(std::move(e));
  }
  if (id.empty()) id = "mock:" + script.stem().string();
  // Editing the script changes the model id, so cached replies are not reused.
  return std::make_shared<MockProvider>(std::move(entries), std::move(id),
                                        "scripted-" + sha256_hex(contents.str()).substr(0, 12));
}

std::string MockProvider::complete(const std::string& prompt, std::chrono::milliseconds) {
  std::lock_guard lock(mutex_);
  ++calls_;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (prompt.find(entries_[i].match) == std::string::npos) continue;
    if (failures_left_[i] > 0) {
      --failures_left_[i];
      throw TransientError("scripted failure");
    }
    return entries_[i].reply;
  }
  throw Error(ErrorCode::ProviderUnavailable, "mock script has no entry for prompt");
}

std::size_t MockProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Cache

std::string cache_key(std::string_view provider_id, std::string_view model_id,
                      std::string_view prompt) {
  std::string material;
  material.reserve(provider_id.size() + model_id.size() + prompt.size() + 2);
  material.append(provider_id).push_back('\0');
  material.append(model_id).push_back('\0');
  material.append(prompt);
  return sha256_hex(material);
}

namespace {
std::string checksum(const std::string& prompt, const std::string& reply) {
  return sha256_hex(prompt + '\0' + reply);
}
}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<PromptExchange> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto path = dir_ / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    PromptExchange ex;
    ex.rendered_prompt = j.at("prompt").get<std::string>();
    ex.raw_reply = j.at("reply").get<std::string>();
    ex.provider_id = j.at("provider_id").get<std::string>();
    ex.model_id = j.at("model_id").get<std::string>();
    ex.timestamp = j.at("timestamp").get<std::int64_t>();
    if (j.at("checksum").get<std::string>() != checksum(ex.rendered_prompt, ex.raw_reply) ||
        cache_key(ex.provider_id, ex.model_id, ex.rendered_prompt) != key) {
      throw Error(ErrorCode::CacheCorruption, path.string());
    }
    ex.cache_key = key;
    ex.from_cache = true;
    return ex;
  } catch (const std::exception& e) {
    ++corrupt_;
    spdlog::warn("cache entry {} unusable, treating as miss: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::store(const PromptExchange& exchange) {
  std::unique_lock lock(mutex_);
  ordered_json j;
  j["prompt"] = exchange.rendered_prompt;
  j["reply"] = exchange.raw_reply;
  j["provider_id"] = exchange.provider_id;
  j["model_id"] = exchange.model_id;
  j["timestamp"] = exchange.timestamp;
  j["checksum"] = checksum(exchange.rendered_prompt, exchange.raw_reply);
  const auto path = dir_ / (exchange.cache_key + ".json");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::UnreadableFile, tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::size_t ResponseCache::corrupt_entries_seen() const { return corrupt_.load(); }

// ---------------------------------------------------------------------------
// Completion

PromptExchange complete(const std::string& prompt, Provider& provider, const RetryBudget& budget,
                        ResponseCache* cache) {
  PromptExchange ex;
  ex.rendered_prompt = prompt;
  ex.provider_id = provider.provider_id();
  ex.model_id = provider.model_id();
  ex.cache_key = cache_key(ex.provider_id, ex.model_id, prompt);
  if (cache != nullptr) {
    if (auto hit = cache->lookup(ex.cache_key)) return *hit;
  }
  const int max_attempts = 1 + std::max(0, budget.retries);
  bool last_was_timeout = false;
  std::string last_error;
  auto delay = budget.backoff;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    ex.attempts = attempt;
    try {
      ex.raw_reply = provider.complete(prompt, budget.timeout);
      ex.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
      if (cache != nullptr) cache->store(ex);
      return ex;
    } catch (const TimeoutError& e) {
      last_was_timeout = true;
      last_error = e.what();
    } catch (const TransientError& e) {
      last_was_timeout = false;
      last_error = e.what();
    }
    spdlog::debug("{}: attempt {}/{} failed: {}", ex.provider_id, attempt, max_attempts, last_error);
    if (attempt < max_attempts && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw Error(last_was_timeout ? ErrorCode::Timeout : ErrorCode::ProviderUnavailable,
              fmt::format("{} after {} attempts: {}", ex.provider_id, max_attempts, last_error));
}

Gateway::Gateway(std::shared_ptr<Provider> provider, std::optional<std::filesystem::path> cache_dir,
                 RetryBudget budget, std::size_t max_in_flight)
    : provider_(std::move(provider)), budget_(budget), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {
  if (!provider_) throw Error(ErrorCode::ProviderUnavailable, "no provider configured");
  if (cache_dir) cache_ = std::make_unique<ResponseCache>(*cache_dir);
}

PromptExchange Gateway::complete(const std::string& prompt) {
  {
    std::unique_lock lock(slot_mutex_);
    slot_cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
  }
  struct Release {
    Gateway* g;
    ~Release() {
      {
        std::lock_guard lock(g->slot_mutex_);
        --g->in_flight_;
      }
      g->slot_cv_.notify_one();
    }
  } release{this};
  // Counts every request that reaches the provider, failed or not.
  class Counting final : public Provider {
  public:
    Counting(Provider& inner, std::size_t& count, std::mutex& m) : inner_(inner), count_(count), m_(m) {}
    std::string provider_id() const override { return inner_.provider_id(); }
    std::string model_id() const override { return inner_.model_id(); }
    std::string complete(const std::string& p, std::chrono::milliseconds t) override {
      {
        std::lock_guard lock(m_);
        ++count_;
      }
      return inner_.complete(p, t);
    }

  private:
    Provider& inner_;
    std::size_t& count_;
    std::mutex& m_;
  } counting(*provider_, requests_, slot_mutex_);
  return llm::complete(prompt, counting, budget_, cache_.get());
}

std::size_t Gateway::network_requests() const {
  std::lock_guard lock(slot_mutex_);
  return requests_;
}

// ---------------------------------------------------------------------------
// Separation parser

namespace {

struct TermIndex {
  std::map<std::string, std::size_t> by_norm;

  explicit TermIndex(const std::vector<std::string>& terms) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      by_norm.emplace(text::normalize_label(terms[i]), i);
    }
  }

  std::optional<std::size_t> find(std::string_view item) const {
    auto it = by_norm.find(text::normalize_label(item));
    if (it == by_norm.end()) return std::nullopt;
    return it->second;
  }
};

std::string strip_decoration(std::string_view raw) {
  std::string s(text::trim(raw));
  auto erase_all = [&](std::string_view pat) {
    for (auto p = s.find(pat); p != std::string::npos; p = s.find(pat)) s.erase(p, pat.size());
  };
  erase_all("**");
  erase_all("__");
  erase_all("`");
  erase_all("“");
  erase_all("”");
  erase_all("•");
  s = std::string(text::trim(s));
  // Leading bullets and numbering: "-", "*", "+", "1.", "2)", "a)".
  while (!s.empty()) {
    if (s[0] == '-' || s[0] == '*' || s[0] == '+' || s[0] == '[' || s[0] == '"' || s[0] == '\'') {
      s.erase(0, 1);
      s = std::string(text::trim(s));
      continue;
    }
    std::size_t d = 0;
    while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
    if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')') &&
        (d + 1 == s.size() || s[d + 1] == ' ')) {
      s.erase(0, d + 1);
      s = std::string(text::trim(s));
      continue;
    }
    break;
  }
  while (!s.empty() && std::string_view(".;:]\"'!").find(s.back()) != std::string_view::npos) {
    s.pop_back();
    s = std::string(text::trim(s));
  }
  // Trailing explanation in parentheses.
  if (!s.empty() && s.back() == ')') {
    if (auto open = s.rfind('('); open != std::string::npos && open > 0) {
      s = std::string(text::trim(s.substr(0, open)));
    }
  }
  return s;
}

bool is_filler(std::string_view item) {
  static const std::set<std::string> kFiller = {"none", "nenhum", "nenhuma", "n/a", "empty",
                                                "vazio", "nothing", ""};
  return kFiller.count(text::normalize_label(item)) > 0;
}

/// Resolves one list item to input-term indices, trying the whole item, the
/// part before an explanation dash or colon, and finally a split on "and"/"e".
std::vector<std::size_t> resolve_item(const std::string& item, const TermIndex& index) {
  if (auto hit = index.find(item)) return {*hit};
  for (std::string_view sep : {" - ", " – ", " — ", ": "}) {
    if (auto p = item.find(sep); p != std::string::npos) {
      const auto head = strip_decoration(item.substr(0, p));
      if (auto hit = index.find(head)) return {*hit};
    }
  }
  for (std::string_view conj : {" and ", " e ", " & "}) {
    if (item.find(conj) == std::string::npos) continue;
    std::vector<std::size_t> parts;
    std::size_t start = 0;
    bool all = true;
    while (true) {
      const auto p = item.find(conj, start);
      const auto piece = strip_decoration(item.substr(start, p == std::string::npos ? std::string::npos : p - start));
      if (auto hit = index.find(piece)) {
        parts.push_back(*hit);
      } else {
        all = false;
        break;
      }
      if (p == std::string::npos) break;
      start = p + conj.size();
    }
    if (all && !parts.empty()) return parts;
  }
  return {};
}

}  // namespace

SeparationResult parse_separation(std::string_view reply, const std::vector<std::string>& input_terms) {
  static const std::regex kMarker(R"((group|grupo)\s*(?:#|n\.?\s*)?\s*(1|2|one|two|um|dois)\b)",
                                  std::regex::icase);
  const std::string body(reply);
  struct Marker {
    std::size_t begin;
    std::size_t end;
    int group;
  };
  std::vector<Marker> markers;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kMarker); it != std::sregex_iterator();
       ++it) {
    const std::string which = text::normalize((*it)[2].str());
    const int group = (which == "1" || which == "one" || which == "um") ? 1 : 2;
    markers.push_back({static_cast<std::size_t>(it->position()),
                       static_cast<std::size_t>(it->position() + it->length()), group});
  }
  if (markers.empty()) throw Error(ErrorCode::UnparseableSeparation, "no group markers in reply");

  const TermIndex index(input_terms);
  std::vector<int> assignment(input_terms.size(), 0);  // 0 unseen, 1/2 group, 3 both
  SeparationResult result;

  for (std::size_t m = 0; m < markers.size(); ++m) {
    const std::size_t seg_end = m + 1 < markers.size() ? markers[m + 1].begin : body.size();
    std::string segment = body.substr(markers[m].end, seg_end - markers[m].end);
    // Drop a heading such as "(unrelated to X):" on the marker's own line.
    const auto nl = segment.find('\n');
    const auto colon = segment.find(':');
    if (colon != std::string::npos && (nl == std::string::npos || colon < nl)) {
      segment.erase(0, colon + 1);
    } else if (nl != std::string::npos) {
      const auto head = strip_decoration(segment.substr(0, nl));
      if (!head.empty() && resolve_item(head, index).empty() && head.find(',') == std::string::npos) {
        segment.erase(0, nl + 1);
      }
    }
    std::vector<std::string> items;
    std::string cur;
    int depth = 0;  // separators inside parentheses belong to an explanation
    for (char c : segment) {
      if (c == '(') ++depth;
      if (c == ')' && depth > 0) --depth;
      if (c == '\n' || (depth == 0 && (c == ',' || c == ';'))) {
        items.push_back(cur);
        cur.clear();
        depth = 0;
      } else {
        cur.push_back(c);
      }
    }
    items.push_back(cur);
    for (const auto& raw : items) {
      const auto item = strip_decoration(raw);
      if (is_filler(item)) continue;
      const auto hits = resolve_item(item, index);
      if (hits.empty()) {
        spdlog::debug("separation: dropping reply item '{}' (not an input term)", item);
        result.dropped.push_back(item);
        continue;
      }
      for (auto h : hits) {
        if (assignment[h] == 0) {
          assignment[h] = markers[m].group;
        } else if (assignment[h] != markers[m].group) {
          assignment[h] = 3;
        }
      }
    }
  }
  for (std::size_t i = 0; i < input_terms.size(); ++i) {
    switch (assignment[i]) {
      case 1:
        result.unrelated.push_back(input_terms[i]);
        break;
      case 0:
        result.defaulted.push_back(input_terms[i]);
        result.related.push_back(input_terms[i]);
        break;
      case 3:
        spdlog::debug("separation: '{}' listed in both groups, keeping as related", input_terms[i]);
        result.related.push_back(input_terms[i]);
        break;
      default:
        result.related.push_back(input_terms[i]);
    }
  }
  if (!result.defaulted.empty()) {
    spdlog::debug("separation: {} term(s) missing from reply default to related",
                  result.defaulted.size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Hierarchy parser

namespace {

std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

struct PlacementState {
  const TermIndex& index;
  const std::vector<std::string>& inputs;
  std::vector<bool> placed;
  std::vector<std::string> dropped;
};

bool keep(const HierarchyNode& node) {
  return node.is_input_term || !node.children.empty() || !node.terms.empty();
}

HierarchyNode build_node(const std::string& key, const ordered_json& value, PlacementState& st) {
  HierarchyNode node;
  node.label = std::string(text::trim(key));
  if (const auto hit = st.index.find(node.label); hit && !st.placed[*hit]) {
    st.placed[*hit] = true;
    node.label = st.inputs[*hit];
    node.is_input_term = true;
  }
  if (value.is_object()) {
    for (const auto& [k, v] : value.items()) {
      auto child = build_node(k, v, st);
      if (keep(child)) node.children.push_back(std::move(child));
    }
  } else if (value.is_array()) {
    for (const auto& item : value) {
      if (!item.is_string()) {
        throw Error(ErrorCode::MalformedStructure, fmt::format("non-string leaf under '{}'", key));
      }
      const auto raw = item.get<std::string>();
      const auto hit = st.index.find(raw);
      if (!hit) {
        spdlog::debug("hierarchy: dropping leaf '{}' (not an input term)", raw);
        st.dropped.push_back(raw);
        continue;
      }
      if (st.placed[*hit]) {
        spdlog::debug("hierarchy: '{}' already placed, keeping first placement", raw);
        continue;
      }
      st.placed[*hit] = true;
      node.terms.push_back(st.inputs[*hit]);
    }
  } else {
    throw Error(ErrorCode::MalformedStructure,
                fmt::format("value under '{}' is neither an object nor a list", key));
  }
  return node;
}

void collect_terms(const HierarchyNode& node, std::vector<std::string>& out) {
  if (node.is_input_term) out.push_back(node.label);
  for (const auto& c : node.children) collect_terms(c, out);
  out.insert(out.end(), node.terms.begin(), node.terms.end());
}

}  // namespace

std::vector<std::string> HierarchyResult::placed_terms() const {
  std::vector<std::string> out;
  for (const auto& b : branches) collect_terms(b, out);
  return out;
}

HierarchyResult parse_hierarchy(std::string_view reply, const std::vector<std::string>& input_terms) {
  std::optional<ordered_json> root;
  for (auto open = reply.find('{'); open != std::string_view::npos; open = reply.find('{', open + 1)) {
    auto close = balanced_end(reply, open);
    if (!close) continue;
    try {
      auto j = ordered_json::parse(reply.substr(open, *close - open + 1));
      if (j.is_object()) {
        root = std::move(j);
        break;
      }
    } catch (const ordered_json::exception&) {
    }
  }
  if (!root) throw Error(ErrorCode::NoJsonFound, "no JSON object in reply");

  const TermIndex index(input_terms);
  PlacementState st{index, input_terms, std::vector<bool>(input_terms.size(), false), {}};
  HierarchyResult result;
  for (const auto& [k, v] : root->items()) {
    // A reply echoing the reserved key leaves its terms unplaced.
    if (text::trim(k) == kUnplacedKey) continue;
    auto node = build_node(k, v, st);
    if (keep(node)) result.branches.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < input_terms.size(); ++i) {
    if (st.placed[i]) continue;
    // Only the first spelling of a normalized duplicate input counts.
    if (index.find(input_terms[i]) != i) continue;
    result.unplaced.push_back(input_terms[i]);
  }
  result.dropped = std::move(st.dropped);
  return result;
}

// ---------------------------------------------------------------------------
// Parent parser

std::optional<std::string> parse_parent(std::string_view reply,
                                        const std::vector<std::string>& candidate_parents) {
  const auto words = text::word_tokens(reply);
  std::optional<std::size_t> best;
  std::size_t best_pos = 0;
  std::size_t best_len = 0;
  for (std::size_t c = 0; c < candidate_parents.size(); ++c) {
    const auto needle = text::word_tokens(candidate_parents[c]);
    if (needle.empty() || needle.size() > words.size()) continue;
    for (std::size_t p = 0; p + needle.size() <= words.size(); ++p) {
      if (best && p > best_pos) break;
      if (!std::equal(needle.begin(), needle.end(), words.begin() + static_cast<std::ptrdiff_t>(p))) {
        continue;
      }
      if (!best || p < best_pos || (p == best_pos && needle.size() > best_len)) {
        best = c;
        best_pos = p;
        best_len = needle.size();
      }
      break;
    }
  }
  if (!best) return std::nullopt;
  return candidate_parents[*best];
}

}  // namespace taxo::llm
