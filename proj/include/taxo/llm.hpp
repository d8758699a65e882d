#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace taxo::llm {

// ---------------------------------------------------------------------------
// Prompt templates

enum class TemplateId { SeparateTerms, BuildHierarchy, ParentQuery, TaxonomyContext };

using Binding = std::variant<std::string, std::vector<std::string>>;
using Bindings = std::map<std::string, Binding>;

std::string_view template_text(TemplateId id);

/// Substitutes `<name>` placeholders. Lists join with ", " except the
/// taxonomy-context `<children>` list, which joins with ",".
/// Throws UnboundPlaceholder for a placeholder without a binding.
std::string render(TemplateId id, const Bindings& bindings);

// ---------------------------------------------------------------------------
// Providers

/// Thrown by providers for failures worth retrying.
class TransientError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown by providers when a request exceeds its deadline; retried like a
/// transient failure.
class TimeoutError : public TransientError {
public:
  using TransientError::TransientError;
};

class Provider {
public:
  virtual ~Provider() = default;
  virtual std::string provider_id() const = 0;
  virtual std::string model_id() const = 0;
  /// One request; temperature is pinned to 0 where supported.
  virtual std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) = 0;
};

struct MockEntry {
  std::string match;
  std::string reply;
  int fail_times = 0;
};

/// Scripted offline provider. The first entry whose `match` is a substring of
/// the prompt answers; it raises a transient failure for its first
/// `fail_times` requests. An unmatched prompt is ProviderUnavailable.
/// A loaded script's model id carries a digest of the script contents.
class MockProvider final : public Provider {
public:
  explicit MockProvider(std::vector<MockEntry> entries, std::string id = "mock",
                        std::string model = "scripted");
  static std::shared_ptr<MockProvider> load(const std::filesystem::path& script,
                                            std::string id = "");

  std::string provider_id() const override { return id_; }
  std::string model_id() const override { return model_; }
  std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) override;

  /// Requests received, including failed ones.
  std::size_t calls() const;
  const std::vector<MockEntry>& entries() const { return entries_; }

private:
  std::vector<MockEntry> entries_;
  std::vector<int> failures_left_;
  std::string id_;
  std::string model_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

/// OpenAI-compatible chat-completions endpoint.
class HttpProvider final : public Provider {
public:
  HttpProvider(std::string endpoint, std::string model, std::string api_key);
  /// TAXO_LLM_ENDPOINT, TAXO_LLM_MODEL, and TAXO_LLM_API_KEY_VAR (the name of
  /// the variable holding the key, default OPENAI_API_KEY). Returns null when
  /// the endpoint or key is missing.
  static std::shared_ptr<HttpProvider> from_env();

  std::string provider_id() const override;
  std::string model_id() const override { return model_; }
  std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) override;

private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
};

// ---------------------------------------------------------------------------
// Cache and gateway

struct PromptExchange {
  std::string rendered_prompt;
  std::string provider_id;
  std::string model_id;
  std::string raw_reply;
  std::string cache_key;
  std::int64_t timestamp = 0;
  bool from_cache = false;
  int attempts = 0;
};

std::string cache_key(std::string_view provider_id, std::string_view model_id,
                      std::string_view prompt);

/// One JSON file per exchange, named by the cache key. Readers run
/// concurrently; writes are serialized.
class ResponseCache {
public:
  explicit ResponseCache(std::filesystem::path dir);

  /// A file whose checksum does not match is reported as a miss.
  std::optional<PromptExchange> lookup(const std::string& key) const;
  void store(const PromptExchange& exchange);
  const std::filesystem::path& dir() const { return dir_; }
  std::size_t corrupt_entries_seen() const;

private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  mutable std::atomic<std::size_t> corrupt_{0};
};

struct RetryBudget {
  int retries = 3;
  std::chrono::milliseconds timeout{60000};
  /// First backoff delay; doubles on each retry.
  std::chrono::milliseconds backoff{0};
};

/// Cache lookup, then up to 1 + retries attempts with exponential backoff.
/// Throws ProviderUnavailable or Timeout when the budget runs out.
PromptExchange complete(const std::string& prompt, Provider& provider, const RetryBudget& budget,
                        ResponseCache* cache = nullptr);

class Gateway {
public:
  Gateway(std::shared_ptr<Provider> provider, std::optional<std::filesystem::path> cache_dir = {},
          RetryBudget budget = {}, std::size_t max_in_flight = 4);

  PromptExchange complete(const std::string& prompt);

  Provider& provider() { return *provider_; }
  std::string provider_id() const { return provider_->provider_id(); }
  std::size_t network_requests() const;
  ResponseCache* cache() { return cache_ ? cache_.get() : nullptr; }

private:
  std::shared_ptr<Provider> provider_;
  std::unique_ptr<ResponseCache> cache_;
  RetryBudget budget_;
  std::size_t max_in_flight_;
  mutable std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  std::size_t requests_ = 0;
};

// ---------------------------------------------------------------------------
// Reply parsers

struct SeparationResult {
  std::vector<std::string> unrelated;
  std::vector<std::string> related;
  /// Reply items that matched no input term.
  std::vector<std::string> dropped;
  /// Input terms the reply did not mention; they are in `related`.
  std::vector<std::string> defaulted;
};

/// Groups are returned with the input terms' original spelling.
SeparationResult parse_separation(std::string_view reply, const std::vector<std::string>& input_terms);

struct HierarchyNode {
  std::string label;
  std::vector<HierarchyNode> children;
  std::vector<std::string> terms;
  /// The key itself is an input term (label holds the input spelling).
  bool is_input_term = false;
};

struct HierarchyResult {
  std::vector<HierarchyNode> branches;
  /// Input terms absent from the tree; serialized under "__unplaced__".
  std::vector<std::string> unplaced;
  std::vector<std::string> dropped;

  std::vector<std::string> placed_terms() const;
};

inline constexpr std::string_view kUnplacedKey = "__unplaced__";

HierarchyResult parse_hierarchy(std::string_view reply, const std::vector<std::string>& input_terms);

/// The candidate whose normalized token sequence occurs earliest in the reply
/// (the longer one when two start together); nullopt means abstention.
std::optional<std::string> parse_parent(std::string_view reply,
                                        const std::vector<std::string>& candidate_parents);

}  // namespace taxo::llm
