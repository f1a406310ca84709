#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semspace/corpus.hpp"

namespace semspace {

enum class NodeKind : std::uint8_t { talent = 0, dataset = 1 };

const char* to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

struct LayoutPoint {
  std::string node_id;
  double x = 0.0;
  double y = 0.0;
  NodeKind kind = NodeKind::talent;
  double display_size = 1.0;
  double importance = 1.0;  // level-of-detail priority

  bool operator==(const LayoutPoint&) const = default;
};

/// Talents: 2 + 3 log10(1 + publications); datasets: 6.
double node_display_size(long long publication_count, NodeKind kind);

/// Half-open query rectangle [x0, x1) x [y0, y1).
struct BoundingBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

inline constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

/// Point-region quadtree with per-cell maximum importance, used for viewport
/// queries with level of detail. Immutable after construction.
class QuadTree {
 public:
  static constexpr std::size_t kDefaultLeafCapacity = 64;
  static constexpr int kMaxDepth = 32;

  struct Cell {
    double x0, y0, x1, y1;  // closed bounds
    std::uint32_t begin, end;  // range into points()
    std::int32_t child[4];     // -1 when absent; all -1 for leaves
    double max_importance;
    int depth;

    bool leaf() const { return child[0] < 0 && child[1] < 0 && child[2] < 0 && child[3] < 0; }
  };

  explicit QuadTree(std::vector<LayoutPoint> points, std::size_t leaf_capacity = kDefaultLeafCapacity);

  /// Points in tree order; every subtree owns a contiguous range.
  std::span<const LayoutPoint> points() const { return points_; }
  std::span<const Cell> cells() const { return cells_; }
  std::size_t size() const { return points_.size(); }
  std::size_t leaf_capacity() const { return leaf_capacity_; }
  int depth() const;

  /// Points inside `box`, ordered by importance descending then id. When more
  /// than `max_results` qualify, only the `max_results` most important are
  /// returned.
  std::vector<LayoutPoint> query(const BoundingBox& box, std::size_t max_results) const;

 private:
  std::int32_t build(std::uint32_t begin, std::uint32_t end, double x0, double y0, double x1, double y1, int depth);

  std::vector<LayoutPoint> points_;
  std::vector<Cell> cells_;
  std::size_t leaf_capacity_;
};

/// Builds the tree with importance = display_size.
QuadTree build_quadtree(std::vector<LayoutPoint> points, std::size_t leaf_capacity = QuadTree::kDefaultLeafCapacity);

std::vector<LayoutPoint> query_viewport(const QuadTree& tree, const BoundingBox& box, std::size_t max_results);

/// Lists broken tree invariants (bounds, exactly-once storage, partitioning).
std::vector<std::string> validate_quadtree(const QuadTree& tree);

struct SearchHit {
  std::string node_id;
  std::string display_name;
  NodeKind kind;

  bool operator==(const SearchHit&) const = default;
};

/// Case-insensitive name lookup over talents and datasets. Ranking: exact
/// match, then prefix, then substring; ties by name.
class NameIndex {
 public:
  NameIndex() = default;
  /// Indexes every author and dataset of the snapshot, or only those in
  /// `restrict_to` when given.
  explicit NameIndex(const CorpusSnapshot& snapshot, const IdSet* restrict_to = nullptr);

  std::vector<SearchHit> search(const std::string& query, std::optional<NodeKind> kind, std::size_t limit,
                                std::size_t offset = 0) const;

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    SearchHit hit;
    std::string folded;
  };
  std::vector<Entry> entries_;  // sorted by (folded, display_name, id)
};

/// ASCII case folding; other bytes are left untouched.
std::string fold_case(std::string_view s);

/// Existing co-authors of `author_id` that are present in the layout, sorted by id.
std::vector<std::string> collaborator_highlight(const std::string& author_id, const CorpusSnapshot& snapshot,
                                                const IdSet& layout_nodes);

/// LAY1 binary format: "LAY1", u64 count, then per record u16 id length, id
/// bytes, f32 x, f32 y, u8 node kind, f32 display size (little-endian).
std::vector<unsigned char> encode_lay1(std::span<const LayoutPoint> points);
std::vector<LayoutPoint> read_lay1(std::span<const unsigned char> bytes);
std::vector<LayoutPoint> read_lay1(const std::filesystem::path& path);
void write_lay1(std::span<const LayoutPoint> points, const std::filesystem::path& path);

}  // namespace semspace
