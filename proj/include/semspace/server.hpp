#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "semspace/config.hpp"
#include "semspace/corpus.hpp"
#include "semspace/justify.hpp"
#include "semspace/recommender.hpp"
#include "semspace/spatial.hpp"

namespace semspace {

// Artifact file names inside the data directory.
inline constexpr const char* kSnapshotFile = "snapshot.json";
inline constexpr const char* kPaperEmbeddingsFile = "paper_embeddings.emb1";
inline constexpr const char* kAuthorEmbeddingsFile = "author_embeddings.emb1";
inline constexpr const char* kDatasetEmbeddingsFile = "dataset_embeddings.emb1";
inline constexpr const char* kRecommendationsFile = "recommendations.jsonl";
inline constexpr const char* kLayoutFile = "layout.lay1";
inline constexpr const char* kJustificationsFile = "justifications.jsonl";

/// Everything the API reads. Built once, never modified; the server swaps
/// whole states atomically.
struct AppState {
  SnapshotPtr snapshot;
  std::vector<LayoutPoint> layout;  // file order
  std::unordered_map<std::string, std::size_t> layout_index;
  IdSet layout_ids;
  QuadTree tree;
  NameIndex names;
  RecommendationTable recommendations;

  AppState(SnapshotPtr snapshot, std::vector<LayoutPoint> layout, RecommendationTable recommendations);
};

using StatePtr = std::shared_ptr<const AppState>;

/// Ids that do not resolve against the snapshot (layout nodes of the wrong
/// kind or unknown, recommendation sources/targets), at most `limit` entries.
std::vector<std::string> find_inconsistencies(const CorpusSnapshot& snapshot, const std::vector<LayoutPoint>& layout,
                                              const RecommendationTable& recommendations, std::size_t limit = 20);

/// Loads snapshot, layout and recommendations from `data_dir`. Throws Error
/// naming the missing or corrupt file, or listing inconsistent ids.
StatePtr load_app_state(const std::filesystem::path& data_dir);

/// Serialises with every floating-point value rounded to 6 decimals and
/// printed in plain decimal notation.
std::string dump_api_json(const nlohmann::ordered_json& value);

// Response payloads; the server uses exactly these builders.
nlohmann::ordered_json viewport_payload(const std::vector<LayoutPoint>& points);
nlohmann::ordered_json search_payload(const std::string& query, const std::vector<SearchHit>& hits);
nlohmann::ordered_json node_payload(const AppState& state, const std::string& id);  // throws UnknownIdError
nlohmann::ordered_json recommendations_payload(const AppState& state, const std::string& id, std::size_t limit,
                                               std::size_t offset);
nlohmann::ordered_json collaborators_payload(const std::string& id, const std::vector<std::string>& ids);
nlohmann::ordered_json justification_payload(const FetchResult& result);

class ApiServer {
 public:
  ApiServer(ServerConfig config, StatePtr state, std::shared_ptr<JustificationGateway> gateway);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start();
  /// Blocks serving on the calling thread until stop().
  void run();
  /// Stops accepting connections and waits for in-flight requests.
  void stop();

  void swap_state(StatePtr next);
  StatePtr state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semspace
