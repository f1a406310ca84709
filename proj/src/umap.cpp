// UMAP-style layout: fuzzy simplicial set over the exact cosine k-NN graph,
// then edge-sampled SGD with negative sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <tuple>

#include "layout_internal.hpp"
#include "semspace/error.hpp"
#include "semspace/layout.hpp"

namespace semspace {

namespace {

struct Bandwidth {
  double sigma = 1.0;
  bool converged = false;
};

// Finds sigma with sum_j exp(-max(0, d_j - rho) / sigma) = target.
Bandwidth calibrate_sigma(const double* dist, std::size_t k, double rho, double target, double tolerance,
                          int max_bisection) {
  double lo = 0.0, hi = std::numeric_limits<double>::infinity(), sigma = 1.0;
  Bandwidth out;
  for (int iter = 0; iter < max_bisection; ++iter) {
    double psum = 0.0;
    for (std::size_t j = 0; j < k; ++j) psum += std::exp(-std::max(0.0, dist[j] - rho) / sigma);
    out.sigma = sigma;
    if (std::abs(psum - target) <= tolerance) {
      out.converged = true;
      return out;
    }
    if (psum > target) {
      hi = sigma;
      sigma = 0.5 * (lo + hi);
    } else {
      lo = sigma;
      sigma = std::isinf(hi) ? sigma * 2.0 : 0.5 * (lo + hi);
    }
  }
  return out;
}

}  // namespace

FuzzyGraph fuzzy_simplicial_set(const EmbeddingTable& vectors, std::size_t n_neighbors, double tolerance,
                                int max_bisection) {
  const std::size_t n = vectors.size();
  if (n_neighbors < 1 || n_neighbors >= n) throw std::invalid_argument("fuzzy_simplicial_set: need 1 <= k < n");
  const NeighborList knn = cosine_knn(vectors, n_neighbors);
  const std::size_t k = n_neighbors;
  const double target = std::log2(static_cast<double>(k));

  FuzzyGraph g;
  g.rho.resize(n);
  g.sigma.resize(n);
  std::vector<double> strength(n * k);
  std::vector<char> converged(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const double* dist = knn.distance.data() + i * k;
    double rho = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (dist[j] > 0.0) {
        rho = dist[j];
        break;
      }
    }
    const auto bw = calibrate_sigma(dist, k, rho, target, tolerance, max_bisection);
    g.rho[i] = rho;
    g.sigma[i] = bw.sigma;
    converged[i] = bw.converged;
    for (std::size_t j = 0; j < k; ++j) strength[i * k + j] = std::exp(-std::max(0.0, dist[j] - rho) / bw.sigma);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!converged[i]) g.unconverged.push_back(i);
  }

  // Probabilistic union a + b - ab of the directed memberships.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double, bool>> entries;  // (row, col, value, forward)
  entries.reserve(2 * n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto c = knn.index[i * k + j];
      entries.emplace_back(static_cast<std::uint32_t>(i), c, strength[i * k + j], true);
      entries.emplace_back(c, static_cast<std::uint32_t>(i), strength[i * k + j], false);
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<3>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<3>(b));
  });
  SparseMatrix& m = g.membership;
  m.n = n;
  m.row_ptr.assign(n + 1, 0);
  for (std::size_t t = 0; t < entries.size();) {
    const auto [r, c, v, fwd] = entries[t];
    double a = fwd ? v : 0.0, b = fwd ? 0.0 : v;
    std::size_t next = t + 1;
    if (next < entries.size() && std::get<0>(entries[next]) == r && std::get<1>(entries[next]) == c) {
      (std::get<3>(entries[next]) ? a : b) = std::get<2>(entries[next]);
      ++next;
    }
    // a is w(r -> c), b is w(c -> r).
    m.col.push_back(c);
    m.val.push_back(a + b - a * b);
    ++m.row_ptr[r + 1];
    t = next;
  }
  for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return g;
}

std::pair<double, double> fit_umap_curve(double spread, double min_dist) {
  // Levenberg-Marquardt on 300 samples of the piecewise target over [0, 3 * spread].
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * i / (kSamples - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto residuals = [&](double a, double b, std::vector<double>* ja, std::vector<double>* jb) {
    double sse = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double f = 1.0 / (1.0 + a * p);
      const double r = f - ys[i];
      sse += r * r;
      if (ja) {
        (*ja)[i] = -p * f * f;
        (*jb)[i] = x > 0.0 ? -a * p * 2.0 * std::log(x) * f * f : 0.0;
      }
    }
    return sse;
  };

  double a = 1.0, b = 1.0, lambda = 1e-3;
  std::vector<double> ja(kSamples), jb(kSamples);
  double sse = residuals(a, b, &ja, &jb);
  for (int iter = 0; iter < 500; ++iter) {
    double haa = 0, hab = 0, hbb = 0, ga = 0, gb = 0;
    for (int i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double r = 1.0 / (1.0 + a * p) - ys[i];
      haa += ja[i] * ja[i];
      hab += ja[i] * jb[i];
      hbb += jb[i] * jb[i];
      ga += ja[i] * r;
      gb += jb[i] * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      const double daa = haa * (1.0 + lambda), dbb = hbb * (1.0 + lambda);
      const double det = daa * dbb - hab * hab;
      if (det == 0.0) break;
      const double da = -(dbb * ga - hab * gb) / det;
      const double db = -(daa * gb - hab * ga) / det;
      const double na = a + da, nb = b + db;
      if (na > 0.0 && nb > 0.0) {
        const double nsse = residuals(na, nb, nullptr, nullptr);
        if (nsse < sse) {
          const double rel = (sse - nsse) / std::max(sse, 1e-300);
          a = na;
          b = nb;
          sse = residuals(a, b, &ja, &jb);
          lambda = std::max(lambda * 0.3, 1e-12);
          improved = true;
          if (rel < 1e-15) return {a, b};
          continue;
        }
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return {a, b};
}

namespace {

inline double clip(double v) { return std::clamp(v, -4.0, 4.0); }

double umap_cross_entropy(const std::vector<std::uint32_t>& head, const std::vector<std::uint32_t>& tail,
                          const std::vector<double>& weight, const Coords2D& y, double a, double b) {
  constexpr double eps = 1e-12;
  double ce = 0.0;
  for (std::size_t e = 0; e < head.size(); ++e) {
    const double dx = y[2 * head[e]] - y[2 * tail[e]], dy = y[2 * head[e] + 1] - y[2 * tail[e] + 1];
    const double d2 = dx * dx + dy * dy;
    const double v = 1.0 / (1.0 + a * std::pow(d2, b));
    const double w = weight[e];
    ce -= w * std::log(std::max(v, eps)) + (1.0 - w) * std::log(std::max(1.0 - v, eps));
  }
  return ce;
}

}  // namespace

LayoutResult run_umap(const EmbeddingTable& vectors, const LayoutConfig& config) {
  LayoutConfig cfg = config;
  cfg.method = LayoutMethod::umap;
  const std::size_t n = vectors.size();
  validate_layout_config(cfg, n);
  const UmapConfig& u = cfg.umap;

  const FuzzyGraph graph = fuzzy_simplicial_set(vectors, u.n_neighbors);
  const auto [a, b] = fit_umap_curve(u.spread, u.min_dist);

  // Edge list from the symmetric membership; drop edges too weak to ever be
  // sampled within the epoch budget.
  double max_w = 0.0;
  for (double v : graph.membership.val) max_w = std::max(max_w, v);
  std::vector<std::uint32_t> head, tail;
  std::vector<double> weight;
  const SparseMatrix& m = graph.membership;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) {
      if (m.val[e] < max_w / u.epochs) continue;
      head.push_back(static_cast<std::uint32_t>(i));
      tail.push_back(m.col[e]);
      weight.push_back(m.val[e]);
    }
  }
  const std::size_t n_edges = head.size();
  std::vector<double> epochs_per_sample(n_edges), next_sample(n_edges), epochs_per_negative(n_edges),
      next_negative(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    epochs_per_sample[e] = max_w / weight[e];
    next_sample[e] = epochs_per_sample[e];
    epochs_per_negative[e] = epochs_per_sample[e] / u.negative_sample_rate;
    next_negative[e] = epochs_per_negative[e];
  }

  LayoutResult result;
  result.method = LayoutMethod::umap;
  result.ids = vectors.ids();
  result.unconverged_points = graph.unconverged.size();
  Coords2D& y = result.coords;
  y.resize(2 * n);
  std::mt19937_64 rng(cfg.random_seed);
  std::uniform_real_distribution<double> init(-10.0, 10.0);
  for (double& v : y) v = init(rng);

  result.objective_history.emplace_back(0, umap_cross_entropy(head, tail, weight, y, a, b));
  for (int epoch = 0; epoch < u.epochs; ++epoch) {
    const double alpha = u.learning_rate * (1.0 - static_cast<double>(epoch) / u.epochs);
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (next_sample[e] > epoch + 1) continue;
      const std::size_t j = head[e], k = tail[e];
      double dx = y[2 * j] - y[2 * k], dy = y[2 * j + 1] - y[2 * k + 1];
      double d2 = dx * dx + dy * dy;
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        const double gx = clip(coeff * dx) * alpha, gy = clip(coeff * dy) * alpha;
        y[2 * j] += gx;
        y[2 * j + 1] += gy;
        y[2 * k] -= gx;
        y[2 * k + 1] -= gy;
      }
      next_sample[e] += epochs_per_sample[e];

      const int n_neg = static_cast<int>((epoch + 1 - next_negative[e]) / epochs_per_negative[e]);
      for (int s = 0; s < n_neg; ++s) {
        const std::size_t other = static_cast<std::size_t>(rng() % n);
        if (other == j) continue;
        dx = y[2 * j] - y[2 * other];
        dy = y[2 * j + 1] - y[2 * other + 1];
        d2 = dx * dx + dy * dy;
        if (d2 <= 0.0) continue;
        const double coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
        y[2 * j] += clip(coeff * dx) * alpha;
        y[2 * j + 1] += clip(coeff * dy) * alpha;
      }
      next_negative[e] += n_neg * epochs_per_negative[e];
    }
    for (std::size_t c = 0; c < 2 * n; ++c) {
      if (!std::isfinite(y[c])) throw DivergenceError(epoch + 1, "non-finite coordinate for point " + vectors.id(c / 2));
    }
    if ((epoch + 1) % 50 == 0 || epoch + 1 == u.epochs)
      result.objective_history.emplace_back(epoch + 1, umap_cross_entropy(head, tail, weight, y, a, b));
  }
  detail::center(y);
  result.final_objective = result.objective_history.back().second;
  result.trustworthiness = detail::layout_trustworthiness(vectors, y, cfg);
  return result;
}

}  // namespace semspace
