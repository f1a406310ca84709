#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semspace/corpus.hpp"

namespace semspace {

inline constexpr std::size_t kDefaultDimension = 768;

using EmbeddingVector = std::vector<float>;

/// Dense row-major table of equal-length finite vectors keyed by id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension);

  /// Appends a row. Throws std::invalid_argument on dimension mismatch,
  /// non-finite component or duplicate id.
  void add(std::string id, std::span<const float> values);
  void reserve(std::size_t rows);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> data() const noexcept { return data_; }

  std::optional<std::size_t> find(std::string_view id) const;
  std::optional<std::span<const float>> get(std::string_view id) const;

  bool operator==(const EmbeddingTable& other) const {
    return dimension_ == other.dimension_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-paper vectors plus the author and dataset vectors derived from them.
struct EmbeddingStore {
  EmbeddingTable papers;
  EmbeddingTable authors;   // sorted by id, unit norm
  EmbeddingTable datasets;  // sorted by id, unit norm
  std::size_t authors_without_evidence = 0;
  std::size_t datasets_without_evidence = 0;
};

/// Contribution weight of the author at 1-based byline position `position`
/// on a paper with `byline_length` authors: 1 for the first and last author,
/// 1/k for the k-th author up to the 10th, and 1/10 beyond.
double position_weight(int position, int byline_length);

/// Positionally weighted, L2-normalised sum of the author's paper vectors.
/// Empty when none of the author's papers has a vector or the sum vanishes.
std::optional<EmbeddingVector> aggregate_author_embedding(const std::string& author_id,
                                                          const CorpusSnapshot& snapshot,
                                                          const EmbeddingTable& paper_vectors);

/// Normalised mean of the vectors of every paper that used the dataset.
std::optional<EmbeddingVector> aggregate_dataset_embedding(const std::string& dataset_id,
                                                           const CorpusSnapshot& snapshot,
                                                           const EmbeddingTable& paper_vectors);

/// Aggregates every author and dataset of the snapshot (OpenMP over entities).
EmbeddingStore build_embedding_store(const CorpusSnapshot& snapshot, EmbeddingTable paper_vectors);

/// EMB1 binary format: "EMB1", u32 dimension, u64 count, then per record
/// u16 id length, id bytes, dimension x f32 (all little-endian).
EmbeddingTable read_emb1(const std::filesystem::path& path);
EmbeddingTable read_emb1(std::span<const unsigned char> bytes);
void write_emb1(const EmbeddingTable& table, const std::filesystem::path& path);
std::vector<unsigned char> encode_emb1(const EmbeddingTable& table);

}  // namespace semspace
