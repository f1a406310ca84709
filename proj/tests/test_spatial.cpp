#include <gtest/gtest.h>

#include "semspace/error.hpp"
#include "semspace/reference.hpp"
#include "semspace/spatial.hpp"
#include "test_support.hpp"

using namespace semspace;

namespace {

std::vector<LayoutPoint> random_points(std::size_t n, std::uint64_t seed, double half = 1000.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<LayoutPoint> pts(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof(id), "n%06zu", i);
    pts[i].node_id = id;
    // Clustered x so some cells get deep.
    pts[i].x = i % 5 == 0 ? 0.01 * u(rng) : u(rng);
    pts[i].y = u(rng);
    pts[i].kind = i % 40 == 0 ? NodeKind::dataset : NodeKind::talent;
    pts[i].display_size = pts[i].kind == NodeKind::dataset ? 6.0 : node_display_size(static_cast<long long>(rng() % 200), NodeKind::talent);
    pts[i].importance = pts[i].display_size;
  }
  return pts;
}

BoundingBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1100.0, 1100.0), w(0.0, 900.0);
  BoundingBox b;
  b.x0 = u(rng);
  b.y0 = u(rng);
  b.x1 = b.x0 + w(rng);
  b.y1 = b.y0 + w(rng);
  return b;
}

}  // namespace

TEST(DisplaySize, Examples) {
  EXPECT_DOUBLE_EQ(node_display_size(0, NodeKind::talent), 2.0);
  EXPECT_DOUBLE_EQ(node_display_size(99, NodeKind::talent), 8.0);
  EXPECT_DOUBLE_EQ(node_display_size(9, NodeKind::talent), 5.0);
  EXPECT_DOUBLE_EQ(node_display_size(0, NodeKind::dataset), 6.0);
  EXPECT_DOUBLE_EQ(node_display_size(500, NodeKind::dataset), 6.0);
}

TEST(BoundingBox, IsHalfOpen) {
  const BoundingBox b{0, 0, 10, 10};
  EXPECT_TRUE(b.contains(0, 0));
  EXPECT_TRUE(b.contains(9.999, 5));
  EXPECT_FALSE(b.contains(10, 5));
  EXPECT_FALSE(b.contains(5, 10));
}

TEST(QuadTree, InvariantsOnLargeLayout) {
  const auto pts = random_points(29179, 1);
  const auto tree = build_quadtree(pts);
  EXPECT_EQ(tree.size(), pts.size());
  EXPECT_TRUE(validate_quadtree(tree).empty());
  for (const auto& c : tree.cells())
    if (c.leaf() && c.depth < QuadTree::kMaxDepth) EXPECT_LE(c.end - c.begin, tree.leaf_capacity());
  // Every input point is stored exactly once.
  std::vector<std::string> a, b;
  for (const auto& p : pts) a.push_back(p.node_id);
  for (const auto& p : tree.points()) b.push_back(p.node_id);
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(QuadTree, SinglePointAndEmpty) {
  std::vector<LayoutPoint> one{{"only", 3.0, 4.0, NodeKind::talent, 2.0, 2.0}};
  const auto tree = build_quadtree(one);
  EXPECT_TRUE(validate_quadtree(tree).empty());
  EXPECT_EQ(query_viewport(tree, {0, 0, 10, 10}, 10).size(), 1u);
  EXPECT_TRUE(query_viewport(tree, {5, 5, 10, 10}, 10).empty());
  EXPECT_THROW(build_quadtree({}), std::invalid_argument);
}

TEST(QuadTree, CoincidentPointsTerminate) {
  std::vector<LayoutPoint> pts;
  for (int i = 0; i < 100; ++i) pts.push_back({"c" + std::to_string(100 + i), 1.0, 1.0, NodeKind::talent, 2.0, 2.0});
  const auto tree = build_quadtree(pts, 4);
  EXPECT_TRUE(validate_quadtree(tree).empty());
  EXPECT_LE(tree.depth(), QuadTree::kMaxDepth);
  const auto hits = query_viewport(tree, {0, 0, 2, 2}, 7);
  ASSERT_EQ(hits.size(), 7u);
  EXPECT_EQ(hits[0].node_id, "c100");
  EXPECT_EQ(hits[6].node_id, "c106");
}

// The tree query returns exactly what a linear scan returns.
TEST(QuadTreeProperties, ViewportMatchesScan) {
  const auto pts = random_points(20000, 2);
  const auto tree = build_quadtree(pts, 16);
  std::mt19937_64 rng(3);
  for (int q = 0; q < 300; ++q) {
    const auto box = random_box(rng);
    const std::size_t cap = q % 3 == 0 ? kNoLimit : 1 + rng() % 400;
    EXPECT_EQ(query_viewport(tree, box, cap), reference::viewport(pts, box, cap)) << q;
  }
}

TEST(QuadTreeProperties, PartitionedViewportsCoverEachPointOnce) {
  const auto pts = random_points(5000, 4);
  const auto tree = build_quadtree(pts);
  std::vector<std::string> seen;
  // A grid of half-open boxes tiling a square that contains every point.
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 5; ++j) {
      const BoundingBox b{-1001.0 + i * 2002.0 / 7, -1001.0 + j * 2002.0 / 5, -1001.0 + (i + 1) * 2002.0 / 7,
                          -1001.0 + (j + 1) * 2002.0 / 5};
      for (const auto& p : query_viewport(tree, b, kNoLimit)) seen.push_back(p.node_id);
    }
  std::sort(seen.begin(), seen.end());
  std::vector<std::string> all;
  for (const auto& p : pts) all.push_back(p.node_id);
  EXPECT_EQ(seen, all);
}

TEST(QuadTreeProperties, LevelOfDetailKeepsMostImportant) {
  const auto pts = random_points(3000, 5);
  const auto tree = build_quadtree(pts);
  const BoundingBox all{-2000, -2000, 2000, 2000};
  const auto top = query_viewport(tree, all, 50);
  ASSERT_EQ(top.size(), 50u);
  const auto full = query_viewport(tree, all, kNoLimit);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(top[i], full[i]);
  for (const auto& p : full) {
    if (std::find(top.begin(), top.end(), p) == top.end()) EXPECT_LE(p.importance, top.back().importance);
  }
}

TEST(NameSearch, FindsExactPrefixSubstringInOrder) {
  const auto snap = test_support::corpus_fixture();
  const NameIndex index(snap);
  const auto trey = index.search("Trey Ideker", std::nullopt, 10);
  ASSERT_FALSE(trey.empty());
  EXPECT_EQ(trey[0].node_id, "a1");
  EXPECT_EQ(trey[0].kind, NodeKind::talent);

  const auto ann = index.search("ann", std::nullopt, 10);
  ASSERT_EQ(ann.size(), 3u);
  EXPECT_EQ(ann[0].display_name, "Ann Lee");
  EXPECT_EQ(ann[1].display_name, "Anna Park");
  EXPECT_EQ(ann[2].display_name, "Joanne Smith");

  const auto crispr = index.search("crispr", NodeKind::dataset, 10);
  ASSERT_EQ(crispr.size(), 1u);
  EXPECT_EQ(crispr[0].node_id, "d1");
  EXPECT_TRUE(index.search("crispr", NodeKind::talent, 10).empty());
}

TEST(NameSearch, PagingAndRestriction) {
  const auto snap = test_support::corpus_fixture();
  const NameIndex index(snap);
  const auto page = index.search("ann", std::nullopt, 1, 1);
  ASSERT_EQ(page.size(), 1u);
  EXPECT_EQ(page[0].display_name, "Anna Park");
  EXPECT_TRUE(index.search("ann", std::nullopt, 10, 5).empty());
  EXPECT_TRUE(index.search("", std::nullopt, 10).empty());
  const IdSet only{"a2", "d1"};
  const NameIndex restricted(snap, &only);
  EXPECT_EQ(restricted.size(), 2u);
  EXPECT_EQ(restricted.search("ann", std::nullopt, 10).size(), 1u);
}

TEST(CollaboratorHighlight, OnlyLaidOutCoauthors) {
  const auto snap = test_support::corpus_fixture();
  const IdSet layout{"a1", "a2", "a3", "a4", "d1", "d2"};
  EXPECT_EQ(collaborator_highlight("a1", snap, layout), (std::vector<std::string>{"a2", "a3", "a4"}));
  const IdSet partial{"a1", "a3"};
  EXPECT_EQ(collaborator_highlight("a1", snap, partial), (std::vector<std::string>{"a3"}));
  EXPECT_THROW(collaborator_highlight("a5", snap, layout), UnknownIdError);
}

TEST(Lay1, RoundTrip) {
  std::vector<LayoutPoint> pts{{"a1", 1.5, -2.25, NodeKind::talent, 5.0, 5.0},
                               {"d1", -1000.0, 999.5, NodeKind::dataset, 6.0, 6.0},
                               {"x", 0.0, 0.0, NodeKind::talent, 2.0, 2.0}};
  const auto bytes = encode_lay1(pts);
  EXPECT_EQ(bytes.size(), 4u + 8u + (2 + 2 + 13) + (2 + 2 + 13) + (2 + 1 + 13));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LAY1");
  EXPECT_EQ(read_lay1(bytes), pts);
  test_support::TempDir dir("lay");
  write_lay1(pts, dir / "l.lay1");
  EXPECT_EQ(read_lay1(dir / "l.lay1"), pts);
}

TEST(Lay1, RejectsCorruptInput) {
  std::vector<LayoutPoint> pts{{"a1", 1.5, -2.25, NodeKind::talent, 5.0, 5.0}};
  auto bytes = encode_lay1(pts);
  auto bad_kind = bytes;
  bad_kind[bad_kind.size() - 5] = 7;
  EXPECT_THROW(read_lay1(bad_kind), FormatError);
  bytes.pop_back();
  EXPECT_THROW(read_lay1(bytes), FormatError);
}
