#include "semspace/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "semspace/error.hpp"

namespace semspace {

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
}

void EmbeddingTable::reserve(std::size_t rows) {
  ids_.reserve(rows);
  data_.reserve(rows * dimension_);
  index_.reserve(rows);
}

void EmbeddingTable::add(std::string id, std::span<const float> values) {
  if (values.size() != dimension_) {
    throw std::invalid_argument("vector \"" + id + "\" has dimension " + std::to_string(values.size()) +
                                ", expected " + std::to_string(dimension_));
  }
  for (std::size_t d = 0; d < values.size(); ++d) {
    if (!std::isfinite(values[d]))
      throw std::invalid_argument("vector \"" + id + "\" has a non-finite component at index " + std::to_string(d));
  }
  if (index_.count(id)) throw std::invalid_argument("duplicate vector id \"" + id + "\"");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const float>> EmbeddingTable::get(std::string_view id) const {
  if (auto i = find(id)) return row(*i);
  return std::nullopt;
}

double position_weight(int position, int byline_length) {
  if (byline_length < 1) throw std::invalid_argument("byline length must be at least 1");
  if (position < 1 || position > byline_length)
    throw std::invalid_argument("byline position " + std::to_string(position) + " outside [1, " +
                                std::to_string(byline_length) + "]");
  if (position == 1 || position == byline_length) return 1.0;
  if (position <= 10) return 1.0 / position;
  return 0.1;
}

namespace {

constexpr double kMinNorm = 1e-12;

std::optional<EmbeddingVector> normalized(const std::vector<double>& sum) {
  double sq = 0.0;
  for (double v : sum) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm >= kMinNorm)) return std::nullopt;
  EmbeddingVector out(sum.size());
  for (std::size_t d = 0; d < sum.size(); ++d) out[d] = static_cast<float>(sum[d] / norm);
  return out;
}

void accumulate(std::vector<double>& sum, std::span<const float> v, double w) {
  for (std::size_t d = 0; d < v.size(); ++d) sum[d] += w * static_cast<double>(v[d]);
}

}  // namespace

std::optional<EmbeddingVector> aggregate_author_embedding(const std::string& author_id,
                                                          const CorpusSnapshot& snapshot,
                                                          const EmbeddingTable& paper_vectors) {
  auto papers = snapshot.author_paper_index.find(author_id);
  if (!snapshot.authors.count(author_id) || papers == snapshot.author_paper_index.end())
    throw UnknownIdError(author_id);

  std::vector<double> sum(paper_vectors.dimension(), 0.0);
  bool any = false;
  for (const auto& pid : papers->second) {
    auto vec = paper_vectors.get(pid);
    if (!vec) continue;
    const auto& byline = snapshot.papers.at(pid).author_ids;
    const auto pos = std::find(byline.begin(), byline.end(), author_id) - byline.begin();
    const double w = position_weight(static_cast<int>(pos) + 1, static_cast<int>(byline.size()));
    accumulate(sum, *vec, w);
    any = true;
  }
  if (!any) return std::nullopt;
  return normalized(sum);
}

std::optional<EmbeddingVector> aggregate_dataset_embedding(const std::string& dataset_id,
                                                           const CorpusSnapshot& snapshot,
                                                           const EmbeddingTable& paper_vectors) {
  if (!snapshot.datasets.count(dataset_id)) throw UnknownIdError(dataset_id);
  std::vector<double> sum(paper_vectors.dimension(), 0.0);
  std::size_t count = 0;
  for (const auto& [pid, paper] : snapshot.papers) {
    if (!std::binary_search(paper.dataset_ids.begin(), paper.dataset_ids.end(), dataset_id)) continue;
    auto vec = paper_vectors.get(pid);
    if (!vec) continue;
    accumulate(sum, *vec, 1.0);
    ++count;
  }
  if (count == 0) return std::nullopt;
  for (double& v : sum) v /= static_cast<double>(count);
  return normalized(sum);
}

namespace {

// Fills `out` (ordered like `ids`) in parallel; results are merged serially
// in id order so the table is identical for any thread count.
template <typename Aggregate>
std::size_t aggregate_all(const std::vector<std::string>& ids, std::size_t dimension, EmbeddingTable& out,
                          Aggregate&& aggregate) {
  std::vector<std::optional<EmbeddingVector>> results(ids.size());
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = aggregate(ids[i]);

  out = EmbeddingTable(dimension);
  out.reserve(ids.size());
  std::size_t missing = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (results[i])
      out.add(ids[i], *results[i]);
    else
      ++missing;
  }
  return missing;
}

}  // namespace

EmbeddingStore build_embedding_store(const CorpusSnapshot& snapshot, EmbeddingTable paper_vectors) {
  EmbeddingStore store;
  store.papers = std::move(paper_vectors);
  const std::size_t dim = store.papers.dimension();
  if (dim == 0) throw std::invalid_argument("paper vector table has no dimension");

  std::vector<std::string> author_ids;
  for (const auto& [id, a] : snapshot.authors) author_ids.push_back(id);
  store.authors_without_evidence = aggregate_all(author_ids, dim, store.authors, [&](const std::string& id) {
    return aggregate_author_embedding(id, snapshot, store.papers);
  });

  // Invert paper -> datasets once instead of scanning all papers per dataset.
  std::map<std::string, std::vector<std::size_t>> rows_by_dataset;
  for (const auto& [pid, paper] : snapshot.papers) {
    auto row = store.papers.find(pid);
    if (!row) continue;
    for (const auto& d : paper.dataset_ids) rows_by_dataset[d].push_back(*row);
  }
  std::vector<std::string> dataset_ids;
  for (const auto& [id, d] : snapshot.datasets) dataset_ids.push_back(id);
  store.datasets_without_evidence =
      aggregate_all(dataset_ids, dim, store.datasets, [&](const std::string& id) -> std::optional<EmbeddingVector> {
        auto it = rows_by_dataset.find(id);
        if (it == rows_by_dataset.end()) return std::nullopt;
        std::vector<double> sum(dim, 0.0);
        for (auto r : it->second) accumulate(sum, store.papers.row(r), 1.0);
        for (double& v : sum) v /= static_cast<double>(it->second.size());
        return normalized(sum);
      });
  return store;
}

namespace {
constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};
}

std::vector<unsigned char> encode_emb1(const EmbeddingTable& table) {
  detail::ByteWriter w;
  w.bytes(kEmbMagic, 4);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(table.dimension()));
  w.put<std::uint64_t>(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& id = table.id(i);
    if (id.size() > 0xFFFF) throw FormatError("id longer than 65535 bytes: " + id.substr(0, 32) + "...");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    w.bytes(id.data(), id.size());
    const auto row = table.row(i);
    w.bytes(row.data(), row.size() * sizeof(float));
  }
  return std::move(w.buffer());
}

EmbeddingTable read_emb1(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes, "EMB1");
  const auto magic = r.string(4, "magic");
  if (magic != std::string(kEmbMagic, 4)) throw FormatError("EMB1: bad magic bytes");
  const auto dim = r.get<std::uint32_t>("dimension");
  if (dim == 0) throw FormatError("EMB1: dimension is zero");
  const auto count = r.get<std::uint64_t>("record count");
  EmbeddingTable table(dim);
  // A record takes at least 2 + 4*dim bytes; don't trust a huge count blindly.
  table.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, r.remaining() / (2 + 4ull * dim) + 1)));
  std::vector<float> values(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("id length");
    auto id = r.string(len, "id");
    r.floats(values.data(), dim, "vector");
    for (std::uint32_t d = 0; d < dim; ++d) {
      if (!std::isfinite(values[d]))
        throw FormatError("EMB1: record " + std::to_string(i) + " (\"" + id + "\") has a non-finite component at index " +
                          std::to_string(d));
    }
    try {
      table.add(std::move(id), values);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("EMB1: record ") + std::to_string(i) + ": " + e.what());
    }
  }
  if (r.remaining() != 0)
    throw FormatError("EMB1: " + std::to_string(r.remaining()) + " trailing bytes after byte offset " +
                      std::to_string(r.offset()));
  return table;
}

EmbeddingTable read_emb1(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return read_emb1(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_emb1(const EmbeddingTable& table, const std::filesystem::path& path) {
  detail::write_file(path, encode_emb1(table));
}

}  // namespace semspace
