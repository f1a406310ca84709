#pragma once

// Straightforward serial implementations kept as test oracles and benchmark
// baselines for the optimised kernels.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semspace/corpus.hpp"
#include "semspace/embedding.hpp"
#include "semspace/layout.hpp"
#include "semspace/recommender.hpp"
#include "semspace/spatial.hpp"

namespace semspace::reference {

/// Scores every eligible candidate, sorts the whole list, keeps k.
RecommendationList top_k(std::span<const float> query, const EmbeddingTable& candidates, std::size_t k,
                         const IdSet& excluded, const std::string& source_id = {});

/// One top_k call per source, no batching or threads.
RecommendationTable recommendation_table(const CorpusSnapshot& snapshot, const EmbeddingStore& store,
                                         std::size_t k_collab = kCollaboratorCount,
                                         std::size_t k_users = kDatasetUserCount);

/// Exact O(n^2) t-SNE gradient over a dense pass of all pairs.
GradientResult tsne_gradient(const SparseMatrix& P, const Coords2D& coords, double exaggeration = 1.0);

/// Filters every point against the box and sorts by importance desc, then id.
std::vector<LayoutPoint> viewport(std::span<const LayoutPoint> points, const BoundingBox& box,
                                  std::size_t max_results);

/// Trustworthiness from full rank matrices, straight from the definition.
double trustworthiness(const EmbeddingTable& high_dim, const Coords2D& coords, std::size_t k);

}  // namespace semspace::reference
