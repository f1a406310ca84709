#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "semspace/layout.hpp"
#include "semspace/recommender.hpp"

namespace semspace {

double SparseMatrix::sum() const {
  double s = 0.0;
  for (double v : val) s += v;
  return s;
}

NeighborList cosine_knn(const EmbeddingTable& vectors, std::size_t k) {
  const std::size_t n = vectors.size();
  if (k == 0 || k >= n) throw std::invalid_argument("cosine_knn: need 0 < k < n");

  // Unit-normalised copy whose ids sort like row numbers, so top_k_batch's
  // id tie-break becomes a row tie-break.
  EmbeddingTable unit(vectors.dimension());
  unit.reserve(n);
  std::vector<float> buf(vectors.dimension());
  char name[24];
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = vectors.row(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) throw std::invalid_argument("cosine_knn: zero vector \"" + vectors.id(i) + "\"");
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t d = 0; d < row.size(); ++d) buf[d] = static_cast<float>(row[d] * inv);
    std::snprintf(name, sizeof(name), "%012zu", i);
    unit.add(name, buf);
  }

  std::vector<BatchQuery> queries(n);
  for (std::size_t i = 0; i < n; ++i) {
    queries[i].vector = unit.row(i);
    queries[i].excluded = {static_cast<std::uint32_t>(i)};
  }
  const auto lists = top_k_batch(queries, unit, k);

  NeighborList out;
  out.k = k;
  out.index.resize(n * k);
  out.distance.resize(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto& e = lists[i][j];
      out.index[i * k + j] = static_cast<std::uint32_t>(*unit.find(e.target_id));
      out.distance[i * k + j] = std::max(0.0, 1.0 - e.score);
    }
  }
  return out;
}

namespace {

struct RowCalibration {
  double beta = 1.0;
  bool converged = false;
};

// Bisection on the Gaussian precision so that exp(H(P_i)) hits the target
// perplexity. Writes the normalised conditional row into `p`.
RowCalibration calibrate_row(const double* dist, std::size_t k, double perplexity, double tolerance,
                             int max_bisection, double* p) {
  const double d_min = *std::min_element(dist, dist + k);
  double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
  RowCalibration result;
  for (int iter = 0; iter < max_bisection; ++iter) {
    double sum = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double shifted = dist[j] - d_min;
      p[j] = std::exp(-beta * shifted);
      sum += p[j];
      weighted += p[j] * shifted;
    }
    const double entropy = std::log(sum) + beta * weighted / sum;
    for (std::size_t j = 0; j < k; ++j) p[j] /= sum;
    result.beta = beta;
    if (std::abs(std::exp(entropy) - perplexity) <= tolerance * perplexity) {
      result.converged = true;
      return result;
    }
    if (entropy > std::log(perplexity)) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = 0.5 * (beta + lo);
    }
  }
  return result;
}

}  // namespace

Affinities compute_affinities(const EmbeddingTable& vectors, double perplexity, double tolerance,
                              int max_bisection) {
  const std::size_t n = vectors.size();
  if (n < 2) throw std::invalid_argument("compute_affinities: need at least 2 points");
  if (!(perplexity > 0.0)) throw std::invalid_argument("compute_affinities: perplexity must be positive");
  const std::size_t k = std::min<std::size_t>(n - 1, static_cast<std::size_t>(3.0 * perplexity));
  if (k == 0) throw std::invalid_argument("compute_affinities: perplexity too small");

  const NeighborList knn = cosine_knn(vectors, k);

  Affinities out;
  out.beta.resize(n);
  SparseMatrix& cond = out.conditional;
  cond.n = n;
  cond.row_ptr.resize(n + 1);
  cond.col.resize(n * k);
  cond.val.resize(n * k);
  std::vector<char> converged(n);

  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * k;
    std::vector<std::pair<std::uint32_t, double>> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = {knn.index[base + j], knn.distance[base + j]};
    std::sort(row.begin(), row.end());
    std::vector<double> dist(k);
    for (std::size_t j = 0; j < k; ++j) {
      cond.col[base + j] = row[j].first;
      dist[j] = row[j].second;
    }
    const auto cal = calibrate_row(dist.data(), k, perplexity, tolerance, max_bisection, cond.val.data() + base);
    out.beta[i] = cal.beta;
    converged[i] = cal.converged;
  }
  for (std::size_t i = 0; i <= n; ++i) cond.row_ptr[i] = i * k;
  for (std::size_t i = 0; i < n; ++i) {
    if (!converged[i]) out.unconverged.push_back(i);
  }

  // Symmetrise: p_ij = (p_{j|i} + p_{i|j}) / 2n.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets;
  triplets.reserve(2 * n * k);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = cond.row_ptr[i]; e < cond.row_ptr[i + 1]; ++e) {
      const auto j = cond.col[e];
      const double v = cond.val[e] * scale;
      triplets.emplace_back(static_cast<std::uint32_t>(i), j, v);
      triplets.emplace_back(j, static_cast<std::uint32_t>(i), v);
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  SparseMatrix& joint = out.joint;
  joint.n = n;
  joint.row_ptr.assign(n + 1, 0);
  for (std::size_t t = 0; t < triplets.size();) {
    const auto [r, c, v] = triplets[t];
    double value = v;
    std::size_t next = t + 1;
    // At most two entries share (r, c), one from each direction.
    if (next < triplets.size() && std::get<0>(triplets[next]) == r && std::get<1>(triplets[next]) == c) {
      value += std::get<2>(triplets[next]);
      ++next;
    }
    joint.col.push_back(c);
    joint.val.push_back(value);
    ++joint.row_ptr[r + 1];
    t = next;
  }
  for (std::size_t i = 0; i < n; ++i) joint.row_ptr[i + 1] += joint.row_ptr[i];
  return out;
}

}  // namespace semspace
