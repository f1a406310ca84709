// Optimised kernels against the serial reference implementations.
//   bench_kernels [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "semspace/layout.hpp"
#include "semspace/recommender.hpp"
#include "semspace/reference.hpp"
#include "semspace/spatial.hpp"

using namespace semspace;

namespace {

EmbeddingTable unit_table(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  EmbeddingTable t(dim);
  std::vector<float> v(dim);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto& x : v) s += static_cast<double>(x = g(rng)) * x;
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(s));
    std::snprintf(id, sizeof(id), "v%06zu", i);
    t.add(id, v);
  }
  return t;
}

const EmbeddingTable& candidates() {
  static const EmbeddingTable t = unit_table(8000, 768, 1);
  return t;
}

void BM_TopKBatch(benchmark::State& state) {
  const auto& c = candidates();
  const std::size_t nq = static_cast<std::size_t>(state.range(0));
  std::vector<BatchQuery> queries;
  for (std::size_t q = 0; q < nq; ++q)
    queries.push_back({c.id(q), c.row(q), excluded_rows(c, IdSet{c.id(q)})});
  for (auto _ : state) benchmark::DoNotOptimize(top_k_batch(queries, c, 30));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(nq));
}
BENCHMARK(BM_TopKBatch)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TopKReference(benchmark::State& state) {
  const auto& c = candidates();
  const std::size_t nq = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    for (std::size_t q = 0; q < nq; ++q) benchmark::DoNotOptimize(reference::top_k(c.row(q), c, 30, IdSet{c.id(q)}));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(nq));
}
BENCHMARK(BM_TopKReference)->Arg(64)->Unit(benchmark::kMillisecond);

struct GradientCase {
  SparseMatrix P;
  Coords2D y;
};

const GradientCase& gradient_case(std::size_t n) {
  static std::map<std::size_t, GradientCase> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    GradientCase c;
    c.P = compute_affinities(unit_table(n, 32, 2), 30.0).joint;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 10.0);
    c.y.resize(2 * n);
    for (auto& v : c.y) v = g(rng);
    it = cache.emplace(n, std::move(c)).first;
  }
  return it->second;
}

void BM_GradientBarnesHut(benchmark::State& state) {
  const auto& c = gradient_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tsne_gradient(c.P, c.y, 0.5));
}
BENCHMARK(BM_GradientBarnesHut)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_GradientExact(benchmark::State& state) {
  const auto& c = gradient_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::tsne_gradient(c.P, c.y));
}
BENCHMARK(BM_GradientExact)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

std::vector<LayoutPoint> layout_points(std::size_t n) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  std::vector<LayoutPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].node_id = "n" + std::to_string(i);
    pts[i].x = u(rng);
    pts[i].y = u(rng);
    pts[i].display_size = pts[i].importance = node_display_size(static_cast<long long>(rng() % 200), NodeKind::talent);
  }
  return pts;
}

std::vector<BoundingBox> boxes(std::size_t n) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0), w(10.0, 600.0);
  std::vector<BoundingBox> out(n);
  for (auto& b : out) {
    b.x0 = u(rng);
    b.y0 = u(rng);
    b.x1 = b.x0 + w(rng);
    b.y1 = b.y0 + w(rng);
  }
  return out;
}

void BM_ViewportQuadTree(benchmark::State& state) {
  const auto tree = build_quadtree(layout_points(29179));
  const auto qs = boxes(256);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(query_viewport(tree, qs[i++ % qs.size()], 5000));
}
BENCHMARK(BM_ViewportQuadTree)->Unit(benchmark::kMicrosecond);

void BM_ViewportScan(benchmark::State& state) {
  const auto pts = layout_points(29179);
  const auto qs = boxes(256);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(reference::viewport(pts, qs[i++ % qs.size()], 5000));
}
BENCHMARK(BM_ViewportScan)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
