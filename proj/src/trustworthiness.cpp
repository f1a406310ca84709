#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "layout_internal.hpp"
#include "semspace/layout.hpp"

namespace semspace {

double trustworthiness(const EmbeddingTable& high_dim, const Coords2D& coords, std::size_t k) {
  const std::size_t n = high_dim.size();
  if (coords.size() != 2 * n) throw std::invalid_argument("trustworthiness: coordinate count does not match vectors");
  if (k == 0 || 2 * k >= n) throw std::invalid_argument("trustworthiness: need 0 < k < n/2");
  const std::size_t dim = high_dim.dimension();

  std::vector<double> penalty(n, 0.0);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    std::vector<double> high(n), low(n);
    std::vector<std::uint32_t> order(n), rank(n), low_order(n);
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t si = 0; si < sn; ++si) {
      const auto i = static_cast<std::size_t>(si);
      const float* xi = high_dim.row(i).data();
      for (std::size_t j = 0; j < n; ++j) {
        const float* xj = high_dim.row(j).data();
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (std::size_t d = 0; d < dim; ++d) {
          const double diff = static_cast<double>(xi[d]) - xj[d];
          s += diff * diff;
        }
        high[j] = s;
        const double dx = coords[2 * i] - coords[2 * j], dy = coords[2 * i + 1] - coords[2 * j + 1];
        low[j] = dx * dx + dy * dy;
      }
      // Ranks exclude i itself; ties go to the smaller index.
      auto by = [i](const std::vector<double>& dist) {
        return [&dist, i](std::uint32_t a, std::uint32_t b) {
          if (a == i || b == i) return a == i && b != i;
          return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
        };
      };
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), by(high));
      for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<std::uint32_t>(r);  // order[0] == i

      std::iota(low_order.begin(), low_order.end(), 0u);
      std::partial_sort(low_order.begin(), low_order.begin() + static_cast<std::ptrdiff_t>(k + 1), low_order.end(),
                        by(low));
      double sum = 0.0;
      for (std::size_t r = 1; r <= k; ++r) {
        const std::uint32_t j = low_order[r];
        if (rank[j] > k) sum += static_cast<double>(rank[j]) - static_cast<double>(k);
      }
      penalty[i] = sum;
    }
  }
  double total = 0.0;
  for (double p : penalty) total += p;
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * total;
}

void normalize_layout(Coords2D& coords, double half_extent) {
  if (coords.empty()) return;
  detail::center(coords);
  double max_abs = 0.0;
  for (double v : coords) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0) return;
  const double scale = half_extent / max_abs;
  for (double& v : coords) v *= scale;
}

namespace detail {

void center(Coords2D& coords) {
  const std::size_t n = coords.size() / 2;
  if (n == 0) return;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += coords[2 * i];
    my += coords[2 * i + 1];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    coords[2 * i] -= mx;
    coords[2 * i + 1] -= my;
  }
}

double layout_trustworthiness(const EmbeddingTable& vectors, const Coords2D& coords, const LayoutConfig& config) {
  const std::size_t n = vectors.size();
  const std::size_t k = config.trustworthiness_k;
  if (n <= config.trustworthiness_sample) {
    // Small layouts shrink k to the largest admissible value.
    const std::size_t usable = std::min(k, (n - 1) / 2);
    return usable == 0 ? 1.0 : trustworthiness(vectors, coords, usable);
  }
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(config.random_seed ^ 0x5eedULL);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(config.trustworthiness_sample);
  std::sort(rows.begin(), rows.end());
  EmbeddingTable subset(vectors.dimension());
  subset.reserve(rows.size());
  Coords2D sub_coords;
  sub_coords.reserve(2 * rows.size());
  for (auto r : rows) {
    subset.add(vectors.id(r), vectors.row(r));
    sub_coords.push_back(coords[2 * r]);
    sub_coords.push_back(coords[2 * r + 1]);
  }
  return trustworthiness(subset, sub_coords, std::min(k, rows.size() / 2 - 1));
}

}  // namespace detail

}  // namespace semspace
