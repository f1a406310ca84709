// Barnes-Hut t-SNE: sparse input affinities, quadtree-approximated repulsion,
// gradient descent with momentum, gains and early exaggeration.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "layout_internal.hpp"
#include "semspace/error.hpp"
#include "semspace/layout.hpp"

namespace semspace {

namespace {

constexpr int kMaxTreeDepth = 48;

// Region quadtree over the 2D coordinates; leaves hold one point unless the
// depth cap is hit (coincident points), in which case all are kept together
// and handled exactly.
class BarnesHutTree {
 public:
  explicit BarnesHutTree(const Coords2D& y) : y_(y) {
    const std::size_t n = y.size() / 2;
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::uint32_t>(i);
    if (n == 0) return;
    double x0 = y[0], x1 = y[0], y0 = y[1], y1 = y[1];
    for (std::size_t i = 1; i < n; ++i) {
      x0 = std::min(x0, y[2 * i]);
      x1 = std::max(x1, y[2 * i]);
      y0 = std::min(y0, y[2 * i + 1]);
      y1 = std::max(y1, y[2 * i + 1]);
    }
    const double width = std::max(x1 - x0, y1 - y0);
    nodes_.reserve(2 * n);
    build(0, static_cast<std::uint32_t>(n), x0, y0, width, 0);
  }

  // Repulsive numerator (sum of w^2 (y_i - y_j)) and Z contribution of point i.
  void repulsion(std::size_t i, double theta, double& fx, double& fy, double& z) const {
    fx = fy = z = 0.0;
    if (nodes_.empty()) return;
    const double xi = y_[2 * i], yi = y_[2 * i + 1];
    const double theta2 = theta * theta;
    std::uint32_t stack[4 * kMaxTreeDepth + 8];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.leaf()) {
        for (std::uint32_t p = node.begin; p < node.end; ++p) {
          const std::uint32_t j = order_[p];
          if (j == i) continue;
          const double dx = xi - y_[2 * j], dy = yi - y_[2 * j + 1];
          const double w = 1.0 / (1.0 + dx * dx + dy * dy);
          z += w;
          fx += w * w * dx;
          fy += w * w * dy;
        }
        continue;
      }
      const double dx = xi - node.cx, dy = yi - node.cy;
      const double d2 = dx * dx + dy * dy;
      const bool inside = xi >= node.x0 && xi <= node.x0 + node.width && yi >= node.y0 && yi <= node.y0 + node.width;
      if (!inside && node.width * node.width < theta2 * d2) {
        // Monopole about the centre of mass plus the second-order term of
        // the expansion in the offsets (the first-order term vanishes).
        const double w = 1.0 / (1.0 + d2);
        const double w2 = w * w, w3 = w2 * w;
        const double m = static_cast<double>(node.end - node.begin);
        const double trace = node.mxx + node.myy;
        const double mrx = node.mxx * dx + node.mxy * dy, mry = node.mxy * dx + node.myy * dy;
        const double rmr = dx * mrx + dy * mry;
        z += m * w - w2 * trace + 4.0 * w3 * rmr;
        const double radial = m * w2 + 12.0 * w3 * w * rmr - 2.0 * w3 * trace;
        fx += radial * dx - 4.0 * w3 * mrx;
        fy += radial * dy - 4.0 * w3 * mry;
        continue;
      }
      for (int c = 3; c >= 0; --c) {
        if (node.child[c] >= 0) stack[top++] = static_cast<std::uint32_t>(node.child[c]);
      }
    }
  }

 private:
  struct Node {
    double cx = 0, cy = 0;  // centre of mass
    double mxx = 0, mxy = 0, myy = 0;  // second moments about the centre of mass
    double x0 = 0, y0 = 0, width = 0;
    std::uint32_t begin = 0, end = 0;
    std::int32_t child[4] = {-1, -1, -1, -1};
    bool leaf() const { return child[0] < 0 && child[1] < 0 && child[2] < 0 && child[3] < 0; }
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, double x0, double y0, double width, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.x0 = x0;
    node.y0 = y0;
    node.width = width;
    node.begin = begin;
    node.end = end;
    for (std::uint32_t p = begin; p < end; ++p) {
      node.cx += y_[2 * order_[p]];
      node.cy += y_[2 * order_[p] + 1];
    }
    node.cx /= (end - begin);
    node.cy /= (end - begin);
    for (std::uint32_t p = begin; p < end; ++p) {
      const double ox = y_[2 * order_[p]] - node.cx, oy = y_[2 * order_[p] + 1] - node.cy;
      node.mxx += ox * ox;
      node.mxy += ox * oy;
      node.myy += oy * oy;
    }

    const double half = 0.5 * width;
    const double mx = x0 + half, my = y0 + half;
    if (end - begin > 1 && depth < kMaxTreeDepth && half > 0.0) {
      auto first = order_.begin() + begin, last = order_.begin() + end;
      auto south = [&](std::uint32_t j) { return y_[2 * j + 1] < my; };
      auto west = [&](std::uint32_t j) { return y_[2 * j] < mx; };
      auto split_y = std::partition(first, last, south);
      auto split_sw = std::partition(first, split_y, west);
      auto split_nw = std::partition(split_y, last, west);
      const std::uint32_t bounds[5] = {begin, static_cast<std::uint32_t>(split_sw - order_.begin()),
                                       static_cast<std::uint32_t>(split_y - order_.begin()),
                                       static_cast<std::uint32_t>(split_nw - order_.begin()), end};
      const double ox[4] = {x0, mx, x0, mx};
      const double oy[4] = {y0, y0, my, my};
      for (int c = 0; c < 4; ++c) {
        if (bounds[c + 1] > bounds[c]) node.child[c] = build(bounds[c], bounds[c + 1], ox[c], oy[c], half, depth + 1);
      }
    }
    nodes_[id] = node;
    return id;
  }

  const Coords2D& y_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

void check_coords(const Coords2D& coords) {
  if (coords.size() % 2 != 0) throw std::invalid_argument("coordinates must hold (x, y) pairs");
}

}  // namespace

GradientResult tsne_gradient(const SparseMatrix& P, const Coords2D& coords, double theta, double exaggeration) {
  check_coords(coords);
  const std::size_t n = coords.size() / 2;
  if (P.n != n) throw std::invalid_argument("tsne_gradient: affinity matrix and coordinates disagree on n");
  if (theta < 0.0) throw std::invalid_argument("tsne_gradient: theta must be non-negative");

  const BarnesHutTree tree(coords);
  std::vector<double> rep(2 * n), z(n), attr(2 * n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    tree.repulsion(static_cast<std::size_t>(i), theta, rep[2 * i], rep[2 * i + 1], z[i]);
    const double xi = coords[2 * i], yi = coords[2 * i + 1];
    double ax = 0.0, ay = 0.0;
    for (std::size_t e = P.row_ptr[i]; e < P.row_ptr[i + 1]; ++e) {
      const std::size_t j = P.col[e];
      const double dx = xi - coords[2 * j], dy = yi - coords[2 * j + 1];
      const double w = 1.0 / (1.0 + dx * dx + dy * dy);
      ax += P.val[e] * w * dx;
      ay += P.val[e] * w * dy;
    }
    attr[2 * i] = exaggeration * ax;
    attr[2 * i + 1] = exaggeration * ay;
  }

  GradientResult out;
  for (double v : z) out.normalization += v;
  out.gradient.resize(2 * n);
  const double inv_z = out.normalization > 0.0 ? 1.0 / out.normalization : 0.0;
  for (std::size_t c = 0; c < 2 * n; ++c) out.gradient[c] = 4.0 * (attr[c] - rep[c] * inv_z);
  return out;
}

double tsne_normalization(const Coords2D& coords, double theta) {
  check_coords(coords);
  const std::size_t n = coords.size() / 2;
  const BarnesHutTree tree(coords);
  std::vector<double> z(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double fx, fy;
    tree.repulsion(static_cast<std::size_t>(i), theta, fx, fy, z[i]);
  }
  double total = 0.0;
  for (double v : z) total += v;
  return total;
}

double kl_divergence(const SparseMatrix& P, const Coords2D& coords, double normalization) {
  check_coords(coords);
  double kl = 0.0;
  for (std::size_t i = 0; i < P.n; ++i) {
    for (std::size_t e = P.row_ptr[i]; e < P.row_ptr[i + 1]; ++e) {
      const double p = P.val[e];
      if (p <= 0.0) continue;
      const std::size_t j = P.col[e];
      const double dx = coords[2 * i] - coords[2 * j], dy = coords[2 * i + 1] - coords[2 * j + 1];
      const double q = 1.0 / ((1.0 + dx * dx + dy * dy) * normalization);
      kl += p * std::log(p / q);
    }
  }
  return kl;
}

double kl_divergence_exact(const SparseMatrix& P, const Coords2D& coords) {
  check_coords(coords);
  const std::size_t n = coords.size() / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = coords[2 * i] - coords[2 * j], dy = coords[2 * i + 1] - coords[2 * j + 1];
      z += 1.0 / (1.0 + dx * dx + dy * dy);
    }
  }
  return kl_divergence(P, coords, z);
}

const char* to_string(LayoutMethod m) { return m == LayoutMethod::tsne ? "tsne" : "umap"; }

LayoutMethod layout_method_from_string(const std::string& s) {
  if (s == "tsne") return LayoutMethod::tsne;
  if (s == "umap") return LayoutMethod::umap;
  throw std::invalid_argument("unknown layout method \"" + s + "\" (expected tsne or umap)");
}

void validate_layout_config(const LayoutConfig& config, std::size_t n) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("layout config: " + what); };
  if (config.trustworthiness_k == 0) fail("trustworthiness_k must be positive");
  if (config.method == LayoutMethod::tsne) {
    const auto& t = config.tsne;
    if (n < 10) fail("t-SNE needs at least 10 points, got " + std::to_string(n));
    if (t.perplexity < 2.0) fail("perplexity must be at least 2");
    if (t.perplexity >= static_cast<double>(n) / 3.0)
      fail("perplexity " + std::to_string(t.perplexity) + " must be below n/3 = " + std::to_string(n / 3.0));
    if (t.theta < 0.0 || t.theta > 1.0) fail("theta must lie in [0, 1]");
    if (t.iterations <= 0) fail("iterations must be positive");
    if (!(t.learning_rate > 0.0)) fail("learning_rate must be positive");
    if (t.exaggeration_iterations < 0 || t.momentum_switch_iteration < 0) fail("schedule iterations must be >= 0");
  } else {
    const auto& u = config.umap;
    if (u.n_neighbors < 2) fail("n_neighbors must be at least 2");
    if (n <= u.n_neighbors) fail("UMAP needs more points than n_neighbors");
    if (u.epochs <= 0) fail("epochs must be positive");
    if (u.negative_sample_rate <= 0) fail("negative_sample_rate must be positive");
    if (!(u.min_dist >= 0.0) || !(u.spread > 0.0) || u.min_dist > u.spread) fail("need 0 <= min_dist <= spread");
  }
}

LayoutResult run_tsne(const EmbeddingTable& vectors, const LayoutConfig& config) {
  LayoutConfig cfg = config;
  cfg.method = LayoutMethod::tsne;
  const std::size_t n = vectors.size();
  validate_layout_config(cfg, n);
  const TsneConfig& t = cfg.tsne;

  const Affinities aff = compute_affinities(vectors, t.perplexity);
  const SparseMatrix& P = aff.joint;

  LayoutResult result;
  result.method = LayoutMethod::tsne;
  result.ids = vectors.ids();
  result.unconverged_points = aff.unconverged.size();

  Coords2D& y = result.coords;
  y.resize(2 * n);
  std::mt19937_64 rng(cfg.random_seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  for (double& v : y) v = init(rng);

  std::vector<double> update(2 * n, 0.0), gains(2 * n, 1.0);
  auto record_kl = [&](int iteration) {
    const double z = tsne_normalization(y, t.theta);
    result.objective_history.emplace_back(iteration, kl_divergence(P, y, z));
  };

  for (int iter = 0; iter < t.iterations; ++iter) {
    const double exaggeration = iter < t.exaggeration_iterations ? t.early_exaggeration : 1.0;
    const double momentum = iter < t.momentum_switch_iteration ? t.initial_momentum : t.final_momentum;
    const auto grad = tsne_gradient(P, y, t.theta, exaggeration);
    for (std::size_t c = 0; c < 2 * n; ++c) {
      const double g = grad.gradient[c];
      gains[c] = (g > 0.0) != (update[c] > 0.0) ? gains[c] + 0.2 : gains[c] * 0.8;
      gains[c] = std::max(gains[c], 0.01);
      update[c] = momentum * update[c] - t.learning_rate * gains[c] * g;
      y[c] += update[c];
    }
    detail::center(y);
    for (std::size_t c = 0; c < 2 * n; ++c) {
      if (!std::isfinite(y[c])) throw DivergenceError(iter + 1, "non-finite coordinate for point " + vectors.id(c / 2));
    }
    const int done = iter + 1;
    if (done == 1 || done % 50 == 0 || done == t.iterations) record_kl(done);
  }
  result.final_objective = result.objective_history.back().second;
  result.trustworthiness = detail::layout_trustworthiness(vectors, y, cfg);
  return result;
}

LayoutResult run_layout(const EmbeddingTable& vectors, const LayoutConfig& config) {
  return config.method == LayoutMethod::tsne ? run_tsne(vectors, config) : run_umap(vectors, config);
}

}  // namespace semspace
