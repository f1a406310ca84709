#include "semspace/recommender.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "json.hpp"
#include "semspace/error.hpp"

namespace semspace {

const char* to_string(RecommendationKind kind) {
  return kind == RecommendationKind::collaborator ? "collaborator" : "dataset_user";
}

RecommendationKind recommendation_kind_from_string(const std::string& s) {
  if (s == "collaborator") return RecommendationKind::collaborator;
  if (s == "dataset_user") return RecommendationKind::dataset_user;
  throw std::invalid_argument("unknown recommendation kind \"" + s + "\"");
}

double cosine_similarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) {
    const double a = u[d], b = v[d];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

ExcludedRows excluded_rows(const EmbeddingTable& candidates, const IdSet& excluded_ids) {
  ExcludedRows rows;
  rows.reserve(excluded_ids.size());
  for (const auto& id : excluded_ids) {
    if (auto r = candidates.find(id)) rows.push_back(static_cast<std::uint32_t>(*r));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

namespace {

struct Scored {
  double score;
  std::uint32_t row;
};

// Keeps the best `capacity` candidates; better = higher score, then smaller id.
template <typename Score>
class BoundedHeap {
 public:
  BoundedHeap(const EmbeddingTable& table, std::size_t capacity) : table_(&table), capacity_(capacity) {
    items_.reserve(capacity + 1);
  }

  bool better(const std::pair<Score, std::uint32_t>& a, const std::pair<Score, std::uint32_t>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return table_->id(a.second) < table_->id(b.second);
  }

  // Would an item with this score be admitted? Cheap pre-check.
  bool admits(Score s) const { return items_.size() < capacity_ || !(s < items_.front().first); }

  void push(Score s, std::uint32_t row) {
    const std::pair<Score, std::uint32_t> item{s, row};
    if (items_.size() < capacity_) {
      items_.push_back(item);
      std::push_heap(items_.begin(), items_.end(), cmp());
    } else if (better(item, items_.front())) {
      std::pop_heap(items_.begin(), items_.end(), cmp());
      items_.back() = item;
      std::push_heap(items_.begin(), items_.end(), cmp());
    }
  }

  std::vector<std::pair<Score, std::uint32_t>> sorted() && {
    std::sort(items_.begin(), items_.end(), cmp());
    return std::move(items_);
  }

 private:
  // Heap ordered so the worst kept item sits at the front.
  auto cmp() const {
    return [this](const auto& a, const auto& b) { return better(a, b); };
  }

  const EmbeddingTable* table_;
  std::size_t capacity_;
  std::vector<std::pair<Score, std::uint32_t>> items_;
};

bool is_excluded(const ExcludedRows& excluded, std::uint32_t row) {
  return std::binary_search(excluded.begin(), excluded.end(), row);
}

RecommendationList to_entries(const std::vector<std::pair<double, std::uint32_t>>& ranked,
                              const EmbeddingTable& candidates, const std::string& source_id, std::size_t k) {
  RecommendationList out;
  out.reserve(std::min(k, ranked.size()));
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    out.push_back({source_id, candidates.id(ranked[i].second), ranked[i].first, i + 1});
  }
  return out;
}

}  // namespace

RecommendationList top_k_candidates(std::span<const float> query, const EmbeddingTable& candidates, std::size_t k,
                                    const ExcludedRows& excluded, const std::string& source_id) {
  if (k == 0) throw std::invalid_argument("top_k_candidates: k must be at least 1");
  BoundedHeap<double> heap(candidates, k);
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const auto row = static_cast<std::uint32_t>(r);
    if (is_excluded(excluded, row)) continue;
    heap.push(cosine_similarity(query, candidates.row(r)), row);
  }
  return to_entries(std::move(heap).sorted(), candidates, source_id, k);
}

RecommendationList top_k_candidates(std::span<const float> query, const EmbeddingTable& candidates, std::size_t k,
                                    const IdSet& excluded, const std::string& source_id) {
  return top_k_candidates(query, candidates, k, excluded_rows(candidates, excluded), source_id);
}

namespace {

constexpr std::size_t kQueryLanes = 8;       // queries scored together per candidate row
constexpr std::size_t kQueriesPerTask = 64;  // queries per OpenMP work item
constexpr std::size_t kCandidateTile = 256;  // candidate rows kept hot in cache
constexpr std::size_t kShortlistSlack = 8;   // extra float-ranked rows re-scored in double

// Dot products of up to kQueryLanes queries against one candidate row.
inline void dot_lanes(const float* const* queries, std::size_t lanes, const float* cand, std::size_t dim,
                      float* out) {
  for (std::size_t q = 0; q < lanes; ++q) {
    const float* a = queries[q];
    float s = 0.0f;
#pragma omp simd reduction(+ : s)
    for (std::size_t d = 0; d < dim; ++d) s += a[d] * cand[d];
    out[q] = s;
  }
}

}  // namespace

std::vector<RecommendationList> top_k_batch(std::span<const BatchQuery> queries, const EmbeddingTable& candidates,
                                            std::size_t k) {
  if (k == 0) throw std::invalid_argument("top_k_batch: k must be at least 1");
  const std::size_t dim = candidates.dimension();
  for (const auto& q : queries) {
    if (q.vector.size() != dim) throw std::invalid_argument("top_k_batch: query dimension mismatch");
  }
  std::vector<RecommendationList> results(queries.size());
  const std::size_t n_cand = candidates.size();
  const std::size_t shortlist = k + kShortlistSlack;
  const auto n_tasks = static_cast<std::ptrdiff_t>((queries.size() + kQueriesPerTask - 1) / kQueriesPerTask);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t task = 0; task < n_tasks; ++task) {
    const std::size_t q_begin = static_cast<std::size_t>(task) * kQueriesPerTask;
    const std::size_t q_end = std::min(queries.size(), q_begin + kQueriesPerTask);
    std::vector<BoundedHeap<float>> heaps;
    heaps.reserve(q_end - q_begin);
    for (std::size_t q = q_begin; q < q_end; ++q) heaps.emplace_back(candidates, shortlist);

    std::array<const float*, kQueryLanes> lane_ptr{};
    std::array<float, kQueryLanes> scores{};
    for (std::size_t tile = 0; tile < n_cand; tile += kCandidateTile) {
      const std::size_t tile_end = std::min(n_cand, tile + kCandidateTile);
      for (std::size_t lane0 = q_begin; lane0 < q_end; lane0 += kQueryLanes) {
        const std::size_t lanes = std::min(kQueryLanes, q_end - lane0);
        for (std::size_t l = 0; l < lanes; ++l) lane_ptr[l] = queries[lane0 + l].vector.data();
        for (std::size_t c = tile; c < tile_end; ++c) {
          dot_lanes(lane_ptr.data(), lanes, candidates.row(c).data(), dim, scores.data());
          for (std::size_t l = 0; l < lanes; ++l) {
            auto& heap = heaps[lane0 + l - q_begin];
            if (!heap.admits(scores[l])) continue;
            const auto row = static_cast<std::uint32_t>(c);
            if (is_excluded(queries[lane0 + l].excluded, row)) continue;
            heap.push(scores[l], row);
          }
        }
      }
    }

    for (std::size_t q = q_begin; q < q_end; ++q) {
      auto coarse = std::move(heaps[q - q_begin]).sorted();
      std::vector<std::pair<double, std::uint32_t>> exact;
      exact.reserve(coarse.size());
      for (const auto& [s, row] : coarse) exact.emplace_back(cosine_similarity(queries[q].vector, candidates.row(row)), row);
      std::sort(exact.begin(), exact.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return candidates.id(a.second) < candidates.id(b.second);
      });
      results[q] = to_entries(exact, candidates, queries[q].source_id, k);
    }
  }
  return results;
}

namespace {

constexpr std::size_t kBatchChunk = 1024;

// Runs top_k_batch over `sources` in chunks so exclusion lists for the whole
// corpus never have to be held at once.
void recommend_for(const EmbeddingTable& sources, const EmbeddingTable& candidates, std::size_t k,
                   const std::function<IdSet(const std::string&)>& excluded_for,
                   std::map<std::string, RecommendationList>& out) {
  for (std::size_t begin = 0; begin < sources.size(); begin += kBatchChunk) {
    const std::size_t end = std::min(sources.size(), begin + kBatchChunk);
    std::vector<BatchQuery> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back({sources.id(i), sources.row(i), excluded_rows(candidates, excluded_for(sources.id(i)))});
    }
    auto lists = top_k_batch(batch, candidates, k);
    for (std::size_t i = begin; i < end; ++i) out.emplace(sources.id(i), std::move(lists[i - begin]));
  }
}

}  // namespace

RecommendationTable build_recommendation_table(const CorpusSnapshot& snapshot, const EmbeddingStore& store,
                                               std::size_t k_collab, std::size_t k_users) {
  RecommendationTable table;
  table.authors_skipped = snapshot.authors.size() - store.authors.size();
  table.datasets_skipped = snapshot.datasets.size() - store.datasets.size();
  if (store.authors.empty()) return table;

  recommend_for(store.authors, store.authors, k_collab,
                [&](const std::string& a) {
                  IdSet ex;
                  if (auto it = snapshot.coauthor_index.find(a); it != snapshot.coauthor_index.end()) ex = it->second;
                  ex.insert(a);
                  return ex;
                },
                table.collaborator_recs);
  recommend_for(store.datasets, store.authors, k_users,
                [&](const std::string& d) {
                  auto it = snapshot.dataset_user_index.find(d);
                  return it == snapshot.dataset_user_index.end() ? IdSet{} : it->second;
                },
                table.dataset_user_recs);
  return table;
}

namespace {

void append_lines(std::string& out, const std::map<std::string, RecommendationList>& recs, RecommendationKind kind) {
  char score[64];
  for (const auto& [source, list] : recs) {
    for (const auto& e : list) {
      std::snprintf(score, sizeof(score), "%.6f", e.score);
      nlohmann::ordered_json j;
      j["source"] = e.source_id;
      j["kind"] = to_string(kind);
      j["target"] = e.target_id;
      std::string line = j.dump();
      line.pop_back();  // splice the fixed-precision score in by hand
      line += ",\"score\":";
      line += score;
      line += ",\"rank\":" + std::to_string(e.rank) + "}\n";
      out += line;
    }
  }
}

}  // namespace

std::string format_recommendations(const RecommendationTable& table) {
  std::string out;
  append_lines(out, table.collaborator_recs, RecommendationKind::collaborator);
  append_lines(out, table.dataset_user_recs, RecommendationKind::dataset_user);
  return out;
}

void write_recommendations(const RecommendationTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << format_recommendations(table);
  if (!out) throw Error(path.string() + ": write failed");
}

RecommendationTable read_recommendations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path.string(), 0, "cannot open file");
  RecommendationTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RecommendationEntry e{j.at("source").get<std::string>(), j.at("target").get<std::string>(),
                            j.at("score").get<double>(), j.at("rank").get<std::size_t>()};
      const auto kind = recommendation_kind_from_string(j.at("kind").get<std::string>());
      auto& list = (kind == RecommendationKind::collaborator ? table.collaborator_recs
                                                              : table.dataset_user_recs)[e.source_id];
      if (e.rank != list.size() + 1) throw std::invalid_argument("ranks out of order");
      list.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw CorpusError(path.string(), line_no, ex.what());
    }
  }
  return table;
}

}  // namespace semspace
