#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "semspace/corpus.hpp"
#include "semspace/error.hpp"
#include "semspace/recommender.hpp"

namespace semspace {

inline constexpr int kEvidenceSinceYear = 2017;
inline constexpr std::size_t kEvidencePerList = 5;
inline constexpr int kJustificationWordCap = 180;

struct EvidenceBundle {
  std::string author_id;
  std::string display_name;
  std::vector<PaperRecord> recent_papers;  // year desc
  std::vector<PaperRecord> cited_papers;   // citation count desc

  bool empty() const { return recent_papers.empty() && cited_papers.empty(); }
  bool operator==(const EvidenceBundle&) const = default;
};

/// Up to five most recent and five most cited papers since 2017; papers
/// already picked as recent are skipped when filling the cited list.
EvidenceBundle select_evidence(const std::string& author_id, const CorpusSnapshot& snapshot);

/// Throws std::invalid_argument if either bundle is empty.
std::string build_collaborator_prompt(const EvidenceBundle& source, const EvidenceBundle& target);
/// Throws std::invalid_argument if the author bundle is empty.
std::string build_dataset_user_prompt(const EvidenceBundle& author, const DatasetRecord& dataset);

struct JustificationKey {
  RecommendationKind kind = RecommendationKind::collaborator;
  std::string source_id;
  std::string target_id;

  auto operator<=>(const JustificationKey&) const = default;
};

struct JustificationRecord {
  JustificationKey key;
  std::string text;
  std::string model_id;
  std::string created_at;  // ISO 8601, UTC
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
};

struct ChatResponse {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ProviderConfig {
  std::string endpoint;  // full URL of the chat-completion route
  std::string api_key;
  std::string model = "mock-justifier-1";
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{1000};  // doubles per retry
  double jitter = 0.25;                          // extra random fraction of each delay
  std::string response_path = "/choices/0/message/content";  // JSON pointer
  std::size_t max_concurrent = 4;
  std::size_t queue_capacity = 64;
  bool mock = false;

  /// Fills endpoint/api_key from CM_LLM_ENDPOINT / CM_LLM_API_KEY when unset.
  void apply_environment();
};

class ProviderError : public Error {
 public:
  enum class Kind { auth, transient, malformed, rejected };

  ProviderError(Kind kind, const std::string& what, int attempts = 1)
      : Error(what), kind_(kind), attempts_(attempts) {}

  Kind kind() const noexcept { return kind_; }
  bool retriable() const noexcept { return kind_ == Kind::transient; }
  int attempts() const noexcept { return attempts_; }

 private:
  Kind kind_;
  int attempts_;
};

/// Too many justification requests already queued.
class GatewayBusy : public Error {
 public:
  using Error::Error;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  /// One attempt; throws ProviderError on failure.
  virtual ChatResponse complete(const JustificationKey& key, const ChatRequest& request) = 0;
};

/// Offline provider whose text depends only on the key.
class MockProvider : public LlmProvider {
 public:
  ChatResponse complete(const JustificationKey& key, const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

/// HTTP POST {"model","messages"} to the configured endpoint.
class HttpProvider : public LlmProvider {
 public:
  explicit HttpProvider(ProviderConfig config);
  ChatResponse complete(const JustificationKey& key, const ChatRequest& request) override;

 private:
  ProviderConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& config);

std::string mock_justification_text(const JustificationKey& key);

/// Justification cache persisted as an append-only JSON-lines file
/// (last write wins on load). Readers never take a lock.
class JustificationCache {
 public:
  JustificationCache() = default;
  /// Loads `path` if it exists; later stores append to it. Empty path keeps
  /// the cache in memory only.
  explicit JustificationCache(std::filesystem::path path);

  std::optional<JustificationRecord> find(const JustificationKey& key) const;
  void store(const JustificationRecord& record);
  std::size_t size() const;

 private:
  using Map = std::map<JustificationKey, JustificationRecord>;
  std::filesystem::path path_;
  std::shared_ptr<const Map> records_ = std::make_shared<const Map>();
  std::mutex write_mutex_;
};

enum class CacheStatus { hit, miss, coalesced };

struct FetchResult {
  JustificationRecord record;
  CacheStatus status = CacheStatus::miss;
};

/// Cache + single-flight + bounded concurrency + retries in front of a provider.
class JustificationGateway {
 public:
  JustificationGateway(ProviderConfig config, std::unique_ptr<LlmProvider> provider,
                       std::filesystem::path cache_path = {});

  FetchResult fetch(const JustificationKey& key, const std::string& prompt);

  std::size_t upstream_calls() const { return upstream_calls_.load(); }
  const ProviderConfig& config() const { return config_; }
  const JustificationCache& cache() const { return cache_; }

 private:
  JustificationRecord call_with_retries(const JustificationKey& key, const std::string& prompt);

  ProviderConfig config_;
  std::unique_ptr<LlmProvider> provider_;
  JustificationCache cache_;

  std::mutex inflight_mutex_;
  std::map<JustificationKey, std::shared_future<JustificationRecord>> inflight_;
  std::size_t admitted_ = 0;  // guarded by inflight_mutex_

  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  std::size_t running_ = 0;

  std::atomic<std::size_t> upstream_calls_{0};
};

/// Builds the prompt for `key` from the snapshot and fetches it through the
/// gateway. Throws UnknownIdError for ids of the wrong kind or absent ids,
/// std::invalid_argument when an evidence bundle is empty.
FetchResult justify(const JustificationKey& key, const CorpusSnapshot& snapshot, JustificationGateway& gateway);

}  // namespace semspace
