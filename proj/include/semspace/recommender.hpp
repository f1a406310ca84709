#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "semspace/corpus.hpp"
#include "semspace/embedding.hpp"

namespace semspace {

inline constexpr std::size_t kCollaboratorCount = 30;
inline constexpr std::size_t kDatasetUserCount = 150;

enum class RecommendationKind { collaborator, dataset_user };

const char* to_string(RecommendationKind kind);
RecommendationKind recommendation_kind_from_string(const std::string& s);

struct RecommendationEntry {
  std::string source_id;
  std::string target_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RecommendationEntry&) const = default;
};

using RecommendationList = std::vector<RecommendationEntry>;

struct RecommendationTable {
  std::map<std::string, RecommendationList> collaborator_recs;
  std::map<std::string, RecommendationList> dataset_user_recs;
  std::size_t authors_skipped = 0;   // no vector
  std::size_t datasets_skipped = 0;  // no vector

  bool operator==(const RecommendationTable&) const = default;
};

/// Cosine of the angle between u and v, clamped to [-1, 1]. Throws
/// std::invalid_argument on dimension mismatch or a zero vector.
double cosine_similarity(std::span<const float> u, std::span<const float> v);

/// Sorted, unique rows of the candidate table that must not be returned.
using ExcludedRows = std::vector<std::uint32_t>;

/// Maps excluded ids to candidate rows; ids absent from the table are ignored.
ExcludedRows excluded_rows(const EmbeddingTable& candidates, const IdSet& excluded_ids);

/// Exact top-k by cosine similarity over `candidates` skipping excluded
/// rows. Ordered by score descending, ties broken by ascending target id.
/// This is the definitional path: every score goes through cosine_similarity().
RecommendationList top_k_candidates(std::span<const float> query, const EmbeddingTable& candidates, std::size_t k,
                                    const ExcludedRows& excluded, const std::string& source_id = {});

/// Convenience overload taking the excluded candidates by id.
RecommendationList top_k_candidates(std::span<const float> query, const EmbeddingTable& candidates, std::size_t k,
                                    const IdSet& excluded, const std::string& source_id = {});

struct BatchQuery {
  std::string source_id;
  std::span<const float> vector;  // unit norm
  ExcludedRows excluded;
};

/// Blocked, OpenMP-parallel top-k for many queries at once. Candidates are
/// assumed unit-norm so the dot product ranks like the cosine; the final
/// ordering and reported scores use cosine_similarity() on a small shortlist,
/// which makes the result agree with top_k_candidates().
std::vector<RecommendationList> top_k_batch(std::span<const BatchQuery> queries, const EmbeddingTable& candidates,
                                            std::size_t k);

/// Collaborator (excluding co-authors and self) and dataset-user (excluding
/// past users) recommendations for every entity that has a vector.
RecommendationTable build_recommendation_table(const CorpusSnapshot& snapshot, const EmbeddingStore& store,
                                               std::size_t k_collab = kCollaboratorCount,
                                               std::size_t k_users = kDatasetUserCount);

/// One JSON object per line: {"source","kind","target","score","rank"},
/// score printed with 6 decimals.
std::string format_recommendations(const RecommendationTable& table);
void write_recommendations(const RecommendationTable& table, const std::filesystem::path& path);
RecommendationTable read_recommendations(const std::filesystem::path& path);

}  // namespace semspace
