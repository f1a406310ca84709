#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semspace/embedding.hpp"

namespace semspace {

/// Interleaved 2D coordinates: x0, y0, x1, y1, ...
using Coords2D = std::vector<double>;

/// Compressed sparse rows; columns within a row are ascending.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;  // n + 1 entries
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return col.size(); }
  double sum() const;
};

struct NeighborList {
  std::size_t k = 0;
  std::vector<std::uint32_t> index;  // n * k, nearest first
  std::vector<double> distance;      // n * k, cosine distance 1 - cos
};

/// Exact k nearest neighbours under cosine distance, excluding the point
/// itself. Ties are broken by row id. Throws on zero vectors.
NeighborList cosine_knn(const EmbeddingTable& vectors, std::size_t k);

struct Affinities {
  SparseMatrix conditional;  // row i holds p_{j|i}, sums to 1
  SparseMatrix joint;        // (P + P^T) / 2n, symmetric, sums to 1
  std::vector<double> beta;  // per-point precision of the Gaussian kernel
  std::vector<std::size_t> unconverged;
};

/// Sparse t-SNE input affinities over the 3*perplexity nearest neighbours
/// (cosine distance). Bandwidths are bisected until the realised perplexity
/// is within tolerance*perplexity of the target; points that fail to
/// converge keep their last bandwidth and are listed in `unconverged`.
Affinities compute_affinities(const EmbeddingTable& vectors, double perplexity, double tolerance = 1e-5,
                              int max_bisection = 50);

struct GradientResult {
  std::vector<double> gradient;  // interleaved like Coords2D
  double normalization = 0.0;    // Z = sum over i != j of 1 / (1 + |y_i - y_j|^2)
};

/// Gradient of KL(P || Q) with respect to the 2D coordinates. The attractive
/// part is exact over the sparse P; the repulsive part uses a Barnes-Hut
/// quadtree where a cell is summarised when width / distance < theta.
/// theta = 0 gives the exact gradient. P is multiplied by `exaggeration`.
GradientResult tsne_gradient(const SparseMatrix& P, const Coords2D& coords, double theta,
                             double exaggeration = 1.0);

/// Barnes-Hut estimate of Z alone (exact when theta = 0).
double tsne_normalization(const Coords2D& coords, double theta);

/// KL(P || Q) for a given normalisation Z.
double kl_divergence(const SparseMatrix& P, const Coords2D& coords, double normalization);

/// KL(P || Q) with Z computed exactly in O(n^2).
double kl_divergence_exact(const SparseMatrix& P, const Coords2D& coords);

enum class LayoutMethod { tsne, umap };

const char* to_string(LayoutMethod m);
LayoutMethod layout_method_from_string(const std::string& s);

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double theta = 0.5;
};

struct UmapConfig {
  std::size_t n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  int epochs = 500;
  int negative_sample_rate = 5;
  double learning_rate = 1.0;
};

struct LayoutConfig {
  LayoutMethod method = LayoutMethod::tsne;
  std::uint64_t random_seed = 42;
  TsneConfig tsne;
  UmapConfig umap;
  std::size_t trustworthiness_k = 10;
  // Trustworthiness costs O(n^2 D); above this many points it is evaluated
  // on a seeded random subset of this size.
  std::size_t trustworthiness_sample = 5000;
};

/// Throws std::invalid_argument when the configuration is unusable for n points.
void validate_layout_config(const LayoutConfig& config, std::size_t n);

struct LayoutResult {
  std::vector<std::string> ids;
  Coords2D coords;
  LayoutMethod method = LayoutMethod::tsne;
  double final_objective = 0.0;   // KL for t-SNE, fuzzy cross-entropy for UMAP
  std::vector<std::pair<int, double>> objective_history;  // (iteration or epoch, value)
  double trustworthiness = 0.0;
  std::size_t unconverged_points = 0;
};

LayoutResult run_tsne(const EmbeddingTable& vectors, const LayoutConfig& config);
LayoutResult run_umap(const EmbeddingTable& vectors, const LayoutConfig& config);
LayoutResult run_layout(const EmbeddingTable& vectors, const LayoutConfig& config);

struct FuzzyGraph {
  SparseMatrix membership;  // symmetrised a + b - ab
  std::vector<double> rho;
  std::vector<double> sigma;
  std::vector<std::size_t> unconverged;
};

/// UMAP fuzzy simplicial set over the exact cosine k-NN graph.
FuzzyGraph fuzzy_simplicial_set(const EmbeddingTable& vectors, std::size_t n_neighbors, double tolerance = 1e-5,
                                int max_bisection = 64);

/// Least-squares fit of 1 / (1 + a d^(2b)) to the UMAP target curve.
std::pair<double, double> fit_umap_curve(double spread, double min_dist);

/// Rank-based trustworthiness of a 2D embedding of `high_dim` (Euclidean
/// distances in both spaces). Requires k < n / 2.
double trustworthiness(const EmbeddingTable& high_dim, const Coords2D& coords, std::size_t k = 10);

/// Centres the layout on the origin and scales it uniformly so the largest
/// absolute coordinate equals `half_extent`.
void normalize_layout(Coords2D& coords, double half_extent = 1000.0);

}  // namespace semspace
