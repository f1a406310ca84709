#include <gtest/gtest.h>

#include "semspace/recommender.hpp"
#include "semspace/reference.hpp"
#include "test_support.hpp"

using namespace semspace;
using test_support::fixture;

namespace {

std::vector<float> vec(std::initializer_list<float> v) { return v; }

BatchQuery query_for(const EmbeddingTable& t, std::size_t row, const IdSet& excluded) {
  return {t.id(row), t.row(row), excluded_rows(t, excluded)};
}

}  // namespace

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 1}), vec({2, 2})), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0}), vec({-3, 0})), -1.0);
  EXPECT_NEAR(cosine_similarity(vec({1, 0}), vec({1, 1})), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_THROW(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), std::invalid_argument);
  EXPECT_THROW(cosine_similarity(vec({0, 0}), vec({1, 0})), std::invalid_argument);
}

TEST(Cosine, ScaleInvariantAndBounded) {
  const auto t = test_support::random_unit_table(40, 12, 9);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double c = cosine_similarity(t.row(i), t.row(i + 1));
    EXPECT_LE(std::abs(c), 1.0);
    std::vector<float> s(t.row(i).begin(), t.row(i).end());
    for (auto& x : s) x *= 8.0f;  // exact in binary
    EXPECT_NEAR(cosine_similarity(s, t.row(i + 1)), c, 1e-12);
    EXPECT_NEAR(cosine_similarity(t.row(i + 1), t.row(i)), c, 1e-15);
  }
}

TEST(TopK, TiesBrokenByAscendingId) {
  EmbeddingTable t(2);
  t.add("c", vec({1, 0}));
  t.add("a", vec({1, 0}));
  t.add("b", vec({1, 0}));
  t.add("z", vec({0, 1}));
  const auto r = top_k_candidates(vec({1, 0}), t, 3, IdSet{}, "q");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].target_id, "a");
  EXPECT_EQ(r[1].target_id, "b");
  EXPECT_EQ(r[2].target_id, "c");
  EXPECT_EQ(r[2].rank, 3u);
  EXPECT_EQ(r[0].source_id, "q");
}

TEST(TopK, AllExcludedGivesEmptyList) {
  const auto t = test_support::random_unit_table(5, 4, 1);
  IdSet all(t.ids().begin(), t.ids().end());
  EXPECT_TRUE(top_k_candidates(t.row(0), t, 3, all).empty());
  std::vector<BatchQuery> q{query_for(t, 0, all)};
  EXPECT_TRUE(top_k_batch(q, t, 3)[0].empty());
}

TEST(TopK, FewerCandidatesThanK) {
  const auto t = test_support::random_unit_table(4, 4, 2);
  EXPECT_EQ(top_k_candidates(t.row(0), t, 30, IdSet{"r00001"}).size(), 3u);
  EXPECT_THROW(top_k_candidates(t.row(0), t, 0, IdSet{}), std::invalid_argument);
}

TEST(TopK, ExcludedIdsAbsentFromTableAreIgnored) {
  const auto t = test_support::random_unit_table(6, 4, 2);
  const auto rows = excluded_rows(t, {"r00002", "nope", "r00000"});
  EXPECT_EQ(rows, (ExcludedRows{0, 2}));
}

// Definitional path, batch path and the serial reference agree on random
// instances, including exclusion soundness.
TEST(TopKProperties, BatchMatchesReference) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto t = test_support::random_unit_table(300 + 37 * seed, 24, seed);
    std::mt19937_64 rng(seed);
    std::vector<BatchQuery> queries;
    std::vector<IdSet> excluded;
    for (std::size_t i = 0; i < t.size(); i += 7) {
      IdSet ex{t.id(i)};
      for (int e = 0; e < 20; ++e) ex.insert(t.id(rng() % t.size()));
      excluded.push_back(ex);
      queries.push_back(query_for(t, i, ex));
    }
    const std::size_t k = 1 + seed * 9;
    const auto batch = top_k_batch(queries, t, k);
    ASSERT_EQ(batch.size(), queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto ref = reference::top_k(queries[q].vector, t, k, excluded[q], queries[q].source_id);
      const auto def = top_k_candidates(queries[q].vector, t, k, excluded[q], queries[q].source_id);
      ASSERT_EQ(batch[q].size(), ref.size());
      for (std::size_t r = 0; r < ref.size(); ++r) {
        EXPECT_EQ(batch[q][r].target_id, ref[r].target_id);
        EXPECT_NEAR(batch[q][r].score, ref[r].score, 1e-9);
        EXPECT_EQ(batch[q][r].rank, r + 1);
        EXPECT_EQ(def[r], batch[q][r]);
        EXPECT_FALSE(excluded[q].count(batch[q][r].target_id));
        if (r > 0) EXPECT_GE(batch[q][r - 1].score, batch[q][r].score);
      }
    }
  }
}

TEST(TopKProperties, RankingInvariantUnderQueryScaling) {
  const auto t = test_support::random_unit_table(200, 16, 4);
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<float> s(t.row(i).begin(), t.row(i).end());
    for (auto& x : s) x *= 0.01f;
    const auto a = top_k_candidates(t.row(i), t, 10, IdSet{t.id(i)});
    const auto b = top_k_candidates(s, t, 10, IdSet{t.id(i)});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r].target_id, b[r].target_id);
  }
}

TEST(RecommendationTable, FixtureMatchesExhaustiveOracle) {
  const auto snap = load_corpus(fixture("recs/papers.jsonl"), fixture("recs/authors.jsonl"),
                                fixture("recs/datasets.jsonl"));
  const auto store = build_embedding_store(snap, test_support::vectors_from_jsonl(fixture("recs/paper_vectors.jsonl")));
  const auto table = build_recommendation_table(snap, store);
  EXPECT_EQ(format_recommendations(table), test_support::slurp(fixture("recs/expected.jsonl")));
  EXPECT_EQ(table, reference::recommendation_table(snap, store, kCollaboratorCount, kDatasetUserCount));
}

TEST(RecommendationTable, ExclusionsHoldOnRandomCorpus) {
  const auto snap = test_support::corpus_fixture();
  EmbeddingTable vecs(3);
  vecs.add("p1", vec({1, 0, 0}));
  vecs.add("p2", vec({0, 1, 0}));
  vecs.add("p3", vec({0, 0, 1}));
  vecs.add("p4", vec({1, 1, 0}));
  vecs.add("p5", vec({0, 1, 1}));
  vecs.add("p6", vec({1, 0, 1}));
  const auto store = build_embedding_store(snap, vecs);
  const auto table = build_recommendation_table(snap, store);
  for (const auto& [src, list] : table.collaborator_recs)
    for (const auto& e : list) {
      EXPECT_NE(e.target_id, src);
      EXPECT_FALSE(snap.coauthor_index.at(src).count(e.target_id));
    }
  for (const auto& [src, list] : table.dataset_user_recs)
    for (const auto& e : list) EXPECT_FALSE(snap.dataset_user_index.at(src).count(e.target_id));
  // a1 has co-authored with every other retained author.
  EXPECT_TRUE(table.collaborator_recs.at("a1").empty());
}

TEST(RecommendationTable, FileRoundTrip) {
  const auto snap = load_corpus(fixture("recs/papers.jsonl"), fixture("recs/authors.jsonl"),
                                fixture("recs/datasets.jsonl"));
  const auto store = build_embedding_store(snap, test_support::vectors_from_jsonl(fixture("recs/paper_vectors.jsonl")));
  const auto table = build_recommendation_table(snap, store);
  test_support::TempDir dir("recs");
  write_recommendations(table, dir / "r.jsonl");
  const auto back = read_recommendations(dir / "r.jsonl");
  EXPECT_EQ(format_recommendations(back), format_recommendations(table));
  EXPECT_EQ(back.collaborator_recs.size(), table.collaborator_recs.size());
}
