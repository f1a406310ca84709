#include "semspace/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace semspace::reference {

RecommendationList top_k(std::span<const float> query, const EmbeddingTable& candidates, std::size_t k,
                         const IdSet& excluded, const std::string& source_id) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    if (excluded.count(candidates.id(r))) continue;
    all.emplace_back(cosine_similarity(query, candidates.row(r)), candidates.id(r));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  RecommendationList out;
  for (std::size_t i = 0; i < all.size() && i < k; ++i) out.push_back({source_id, all[i].second, all[i].first, i + 1});
  return out;
}

RecommendationTable recommendation_table(const CorpusSnapshot& snapshot, const EmbeddingStore& store,
                                         std::size_t k_collab, std::size_t k_users) {
  RecommendationTable table;
  table.authors_skipped = snapshot.authors.size() - store.authors.size();
  table.datasets_skipped = snapshot.datasets.size() - store.datasets.size();
  if (store.authors.empty()) return table;
  for (std::size_t i = 0; i < store.authors.size(); ++i) {
    const auto& a = store.authors.id(i);
    IdSet ex;
    if (auto it = snapshot.coauthor_index.find(a); it != snapshot.coauthor_index.end()) ex = it->second;
    ex.insert(a);
    table.collaborator_recs[a] = top_k(store.authors.row(i), store.authors, k_collab, ex, a);
  }
  for (std::size_t i = 0; i < store.datasets.size(); ++i) {
    const auto& d = store.datasets.id(i);
    IdSet ex;
    if (auto it = snapshot.dataset_user_index.find(d); it != snapshot.dataset_user_index.end()) ex = it->second;
    table.dataset_user_recs[d] = top_k(store.datasets.row(i), store.authors, k_users, ex, d);
  }
  return table;
}

GradientResult tsne_gradient(const SparseMatrix& P, const Coords2D& coords, double exaggeration) {
  const std::size_t n = coords.size() / 2;
  if (P.n != n) throw std::invalid_argument("reference::tsne_gradient: size mismatch");
  std::vector<double> dense(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = P.row_ptr[i]; e < P.row_ptr[i + 1]; ++e) dense[i * n + P.col[e]] = P.val[e];

  GradientResult out;
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = coords[2 * i] - coords[2 * j], dy = coords[2 * i + 1] - coords[2 * j + 1];
      w[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
      out.normalization += w[i * n + j];
    }
  }
  out.gradient.assign(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double wij = w[i * n + j];
      const double coef = (exaggeration * dense[i * n + j] - wij / out.normalization) * wij;
      out.gradient[2 * i] += 4.0 * coef * (coords[2 * i] - coords[2 * j]);
      out.gradient[2 * i + 1] += 4.0 * coef * (coords[2 * i + 1] - coords[2 * j + 1]);
    }
  }
  return out;
}

std::vector<LayoutPoint> viewport(std::span<const LayoutPoint> points, const BoundingBox& box,
                                  std::size_t max_results) {
  std::vector<LayoutPoint> hits;
  for (const auto& p : points)
    if (box.contains(p.x, p.y)) hits.push_back(p);
  std::sort(hits.begin(), hits.end(), [](const LayoutPoint& a, const LayoutPoint& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.node_id < b.node_id;
  });
  if (hits.size() > max_results) hits.resize(max_results);
  return hits;
}

double trustworthiness(const EmbeddingTable& high_dim, const Coords2D& coords, std::size_t k) {
  const std::size_t n = high_dim.size();
  if (2 * k >= n || k == 0) throw std::invalid_argument("reference::trustworthiness: need 0 < k < n/2");
  const std::size_t dim = high_dim.dimension();
  auto high = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = static_cast<double>(high_dim.row(i)[d]) - high_dim.row(j)[d];
      s += diff * diff;
    }
    return s;
  };
  auto low = [&](std::size_t i, std::size_t j) {
    const double dx = coords[2 * i] - coords[2 * j], dy = coords[2 * i + 1] - coords[2 * j + 1];
    return dx * dx + dy * dy;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> h, l;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      h.emplace_back(high(i, j), j);
      l.emplace_back(low(i, j), j);
    }
    std::sort(h.begin(), h.end());
    std::sort(l.begin(), l.end());
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t r = 0; r < h.size(); ++r) rank[h[r].second] = r + 1;
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = l[r].second;
      if (rank[j] > k) total += static_cast<double>(rank[j] - k);
    }
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * total;
}

}  // namespace semspace::reference
