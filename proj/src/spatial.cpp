#include "semspace/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "semspace/error.hpp"

namespace semspace {

const char* to_string(NodeKind kind) { return kind == NodeKind::talent ? "talent" : "dataset"; }

NodeKind node_kind_from_string(const std::string& s) {
  if (s == "talent") return NodeKind::talent;
  if (s == "dataset") return NodeKind::dataset;
  throw std::invalid_argument("unknown node kind \"" + s + "\" (expected talent or dataset)");
}

double node_display_size(long long publication_count, NodeKind kind) {
  if (publication_count < 0) throw std::invalid_argument("publication count must be non-negative");
  if (kind == NodeKind::dataset) return 6.0;
  return 2.0 + 3.0 * std::log10(1.0 + static_cast<double>(publication_count));
}

namespace {

// Strict "a comes before b" in LOD order.
bool more_important(const LayoutPoint& a, const LayoutPoint& b) {
  if (a.importance != b.importance) return a.importance > b.importance;
  return a.node_id < b.node_id;
}

}  // namespace

QuadTree::QuadTree(std::vector<LayoutPoint> points, std::size_t leaf_capacity)
    : points_(std::move(points)), leaf_capacity_(std::max<std::size_t>(1, leaf_capacity)) {
  if (points_.empty()) throw std::invalid_argument("quadtree needs at least one point");
  double x0 = points_[0].x, x1 = x0, y0 = points_[0].y, y1 = y0;
  for (const auto& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("non-finite coordinate for node \"" + p.node_id + "\"");
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  cells_.reserve(2 * points_.size() / leaf_capacity_ + 8);
  build(0, static_cast<std::uint32_t>(points_.size()), x0, y0, x1, y1, 0);
}

std::int32_t QuadTree::build(std::uint32_t begin, std::uint32_t end, double x0, double y0, double x1, double y1,
                             int depth) {
  const auto id = static_cast<std::int32_t>(cells_.size());
  Cell cell{x0, y0, x1, y1, begin, end, {-1, -1, -1, -1}, 0.0, depth};
  cell.max_importance = -std::numeric_limits<double>::infinity();
  for (std::uint32_t i = begin; i < end; ++i) cell.max_importance = std::max(cell.max_importance, points_[i].importance);
  cells_.push_back(cell);

  if (end - begin <= leaf_capacity_ || depth >= kMaxDepth) return id;
  const double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
  auto first = points_.begin() + begin, last = points_.begin() + end;
  auto split_y = std::partition(first, last, [my](const LayoutPoint& p) { return p.y < my; });
  auto west = [mx](const LayoutPoint& p) { return p.x < mx; };
  auto split_sw = std::partition(first, split_y, west);
  auto split_nw = std::partition(split_y, last, west);
  const std::uint32_t bounds[5] = {begin, static_cast<std::uint32_t>(split_sw - points_.begin()),
                                   static_cast<std::uint32_t>(split_y - points_.begin()),
                                   static_cast<std::uint32_t>(split_nw - points_.begin()), end};
  // Quadrant order: SW, SE, NW, NE.
  const double cx0[4] = {x0, mx, x0, mx}, cx1[4] = {mx, x1, mx, x1};
  const double cy0[4] = {y0, y0, my, my}, cy1[4] = {my, my, y1, y1};
  for (int c = 0; c < 4; ++c) {
    if (bounds[c + 1] > bounds[c]) {
      const auto child = build(bounds[c], bounds[c + 1], cx0[c], cy0[c], cx1[c], cy1[c], depth + 1);
      cells_[id].child[c] = child;
    }
  }
  return id;
}

int QuadTree::depth() const {
  int d = 0;
  for (const auto& c : cells_) d = std::max(d, c.depth);
  return d;
}

std::vector<LayoutPoint> QuadTree::query(const BoundingBox& box, std::size_t max_results) const {
  if (!(box.x0 < box.x1) || !(box.y0 < box.y1)) throw std::invalid_argument("viewport must satisfy x0 < x1 and y0 < y1");
  if (max_results == 0) throw std::invalid_argument("max_results must be at least 1");

  auto intersects = [&](const Cell& c) { return c.x0 < box.x1 && c.x1 >= box.x0 && c.y0 < box.y1 && c.y1 >= box.y0; };

  // Best-first over cells by subtree max importance; `kept` holds the current
  // answer with the least important point on top.
  auto cell_cmp = [this](std::int32_t a, std::int32_t b) { return cells_[a].max_importance < cells_[b].max_importance; };
  std::priority_queue<std::int32_t, std::vector<std::int32_t>, decltype(cell_cmp)> frontier(cell_cmp);
  auto point_cmp = [this](std::uint32_t a, std::uint32_t b) { return more_important(points_[a], points_[b]); };
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, decltype(point_cmp)> kept(point_cmp);

  if (intersects(cells_[0])) frontier.push(0);
  while (!frontier.empty()) {
    const Cell& cell = cells_[frontier.top()];
    frontier.pop();
    if (kept.size() >= max_results && cell.max_importance < points_[kept.top()].importance) break;
    if (cell.leaf()) {
      for (std::uint32_t i = cell.begin; i < cell.end; ++i) {
        const auto& p = points_[i];
        if (!box.contains(p.x, p.y)) continue;
        if (kept.size() < max_results) {
          kept.push(i);
        } else if (more_important(p, points_[kept.top()])) {
          kept.pop();
          kept.push(i);
        }
      }
      continue;
    }
    for (auto c : cell.child) {
      if (c >= 0 && intersects(cells_[c])) frontier.push(c);
    }
  }

  std::vector<LayoutPoint> out;
  out.reserve(kept.size());
  while (!kept.empty()) {
    out.push_back(points_[kept.top()]);
    kept.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

QuadTree build_quadtree(std::vector<LayoutPoint> points, std::size_t leaf_capacity) {
  for (auto& p : points) p.importance = p.display_size;
  return QuadTree(std::move(points), leaf_capacity);
}

std::vector<LayoutPoint> query_viewport(const QuadTree& tree, const BoundingBox& box, std::size_t max_results) {
  return tree.query(box, max_results);
}

std::vector<std::string> validate_quadtree(const QuadTree& tree) {
  std::vector<std::string> out;
  const auto cells = tree.cells();
  const auto points = tree.points();
  std::vector<int> owner(points.size(), 0);
  for (std::size_t id = 0; id < cells.size(); ++id) {
    const auto& c = cells[id];
    const std::string name = "cell " + std::to_string(id);
    double max_imp = -std::numeric_limits<double>::infinity();
    for (std::uint32_t i = c.begin; i < c.end; ++i) {
      const auto& p = points[i];
      max_imp = std::max(max_imp, p.importance);
      if (p.x < c.x0 || p.x > c.x1 || p.y < c.y0 || p.y > c.y1)
        out.push_back(name + ": point \"" + p.node_id + "\" outside bounds");
    }
    if (max_imp != c.max_importance) out.push_back(name + ": stale max_importance");
    if (c.leaf()) {
      for (std::uint32_t i = c.begin; i < c.end; ++i) ++owner[i];
      if (c.end - c.begin > tree.leaf_capacity() && c.depth < QuadTree::kMaxDepth)
        out.push_back(name + ": leaf over capacity below the depth cap");
      continue;
    }
    const double mx = 0.5 * (c.x0 + c.x1), my = 0.5 * (c.y0 + c.y1);
    const double cx0[4] = {c.x0, mx, c.x0, mx}, cx1[4] = {mx, c.x1, mx, c.x1};
    const double cy0[4] = {c.y0, c.y0, my, my}, cy1[4] = {my, my, c.y1, c.y1};
    std::uint32_t covered = 0, cursor = c.begin;
    for (int q = 0; q < 4; ++q) {
      if (c.child[q] < 0) continue;
      const auto& ch = cells[c.child[q]];
      if (ch.x0 != cx0[q] || ch.x1 != cx1[q] || ch.y0 != cy0[q] || ch.y1 != cy1[q])
        out.push_back(name + ": child " + std::to_string(q) + " does not match its quadrant");
      if (ch.begin != cursor) out.push_back(name + ": children ranges are not contiguous");
      cursor = ch.end;
      covered += ch.end - ch.begin;
    }
    if (covered != c.end - c.begin || cursor != c.end) out.push_back(name + ": children do not cover the parent");
  }
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (owner[i] != 1) out.push_back("point \"" + points[i].node_id + "\" stored " + std::to_string(owner[i]) + " times");
  }
  return out;
}

std::vector<std::string> collaborator_highlight(const std::string& author_id, const CorpusSnapshot& snapshot,
                                                const IdSet& layout_nodes) {
  if (!snapshot.authors.count(author_id)) throw UnknownIdError(author_id);
  std::vector<std::string> out;
  auto it = snapshot.coauthor_index.find(author_id);
  if (it == snapshot.coauthor_index.end()) return out;
  for (const auto& b : it->second) {
    if (b != author_id && layout_nodes.count(b)) out.push_back(b);
  }
  return out;  // IdSet iteration is already sorted
}

}  // namespace semspace
