#include <gtest/gtest.h>

#include <cstring>

#include "semspace/embedding.hpp"
#include "semspace/error.hpp"
#include "test_support.hpp"

using namespace semspace;

namespace {

PaperRecord paper(std::string id, std::vector<std::string> authors, std::vector<std::string> datasets = {}) {
  PaperRecord p;
  p.paper_id = std::move(id);
  p.title = "t";
  p.year = 2022;
  p.author_ids = std::move(authors);
  p.dataset_ids = std::move(datasets);
  return p;
}

AuthorRecord author(std::string id) {
  AuthorRecord a;
  a.author_id = id;
  a.display_name = id;
  return a;
}

double norm(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

// Straight transcription of the weighting rule.
double oracle_weight(int k, int n) {
  if (k == 1 || k == n) return 1.0;
  if (k <= 10) return 1.0 / k;
  return 0.1;
}

}  // namespace

TEST(PositionWeight, NamedCases) {
  EXPECT_DOUBLE_EQ(position_weight(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(position_weight(1, 6), 1.0);
  EXPECT_DOUBLE_EQ(position_weight(6, 6), 1.0);
  EXPECT_DOUBLE_EQ(position_weight(3, 6), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(position_weight(10, 20), 0.1);
  EXPECT_DOUBLE_EQ(position_weight(14, 20), 0.1);
  EXPECT_DOUBLE_EQ(position_weight(20, 20), 1.0);
}

TEST(PositionWeight, MatchesRuleForAllShortBylines) {
  for (int n = 1; n <= 50; ++n)
    for (int k = 1; k <= n; ++k) {
      const double w = position_weight(k, n);
      EXPECT_DOUBLE_EQ(w, oracle_weight(k, n)) << k << "/" << n;
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 1.0);
    }
}

TEST(PositionWeight, RejectsOutOfRange) {
  EXPECT_THROW(position_weight(0, 3), std::invalid_argument);
  EXPECT_THROW(position_weight(4, 3), std::invalid_argument);
  EXPECT_THROW(position_weight(1, 0), std::invalid_argument);
}

TEST(AuthorEmbedding, WeightedSumExample) {
  // a1 leads p1 = (1,0) and is the middle of three on p2 = (0,1):
  // 1*(1,0) + 0.5*(0,1) normalised = (0.8944, 0.4472).
  auto snap = build_snapshot({paper("p1", {"a1"}), paper("p2", {"x", "a1", "y"})}, {author("a1")}, {});
  EmbeddingTable vecs(2);
  vecs.add("p1", std::vector<float>{1, 0});
  vecs.add("p2", std::vector<float>{0, 1});
  auto v = aggregate_author_embedding("a1", snap, vecs);
  ASSERT_TRUE(v);
  EXPECT_NEAR((*v)[0], 2.0 / std::sqrt(5.0), 1e-6);
  EXPECT_NEAR((*v)[1], 1.0 / std::sqrt(5.0), 1e-6);
  EXPECT_NEAR((*v)[0], 0.8944, 1e-4);
  EXPECT_NEAR((*v)[1], 0.4472, 1e-4);
}

TEST(AuthorEmbedding, FirstAndLastWeighEqually) {
  auto snap = build_snapshot({paper("p1", {"a1", "b"}), paper("p2", {"b", "c", "a1"})}, {author("a1")}, {});
  EmbeddingTable vecs(2);
  vecs.add("p1", std::vector<float>{1, 0});
  vecs.add("p2", std::vector<float>{0, 1});
  auto v = aggregate_author_embedding("a1", snap, vecs);
  ASSERT_TRUE(v);
  EXPECT_NEAR((*v)[0], 0.7071, 1e-4);
  EXPECT_NEAR((*v)[1], 0.7071, 1e-4);
}

TEST(AuthorEmbedding, NoVectorsGivesNothing) {
  auto snap = build_snapshot({paper("p1", {"a1"})}, {author("a1")}, {});
  EmbeddingTable vecs(2);
  EXPECT_FALSE(aggregate_author_embedding("a1", snap, vecs));
  EXPECT_THROW(aggregate_author_embedding("zz", snap, vecs), UnknownIdError);
}

TEST(AuthorEmbedding, CancellingVectorsGiveNothing) {
  auto snap = build_snapshot({paper("p1", {"a1"}), paper("p2", {"a1"})}, {author("a1")}, {});
  EmbeddingTable vecs(2);
  vecs.add("p1", std::vector<float>{1, 0});
  vecs.add("p2", std::vector<float>{-1, 0});
  EXPECT_FALSE(aggregate_author_embedding("a1", snap, vecs));
}

TEST(DatasetEmbedding, NormalisedMean) {
  auto snap = build_snapshot({paper("p1", {"a1"}, {"d1"}), paper("p2", {"a1"}, {"d1"}), paper("p3", {"a1"})},
                             {author("a1")}, {{"d1", "D", ""}});
  EmbeddingTable vecs(3);
  vecs.add("p1", std::vector<float>{1, 0, 0});
  vecs.add("p2", std::vector<float>{0, 1, 0});
  vecs.add("p3", std::vector<float>{0, 0, 1});
  auto v = aggregate_dataset_embedding("d1", snap, vecs);
  ASSERT_TRUE(v);
  EXPECT_NEAR((*v)[0], 0.7071, 1e-4);
  EXPECT_NEAR((*v)[1], 0.7071, 1e-4);
  EXPECT_NEAR((*v)[2], 0.0, 1e-7);
}

// Aggregates are unit norm and invariant to scaling paper vectors and to the
// order papers are listed in.
TEST(EmbeddingProperties, UnitNormScaleAndPermutationInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PaperRecord> papers;
    EmbeddingTable vecs(16), scaled(16);
    const int n = 3 + static_cast<int>(rng() % 12);
    for (int p = 0; p < n; ++p) {
      std::vector<std::string> byline;
      const int len = 1 + static_cast<int>(rng() % 14);
      const int pos = static_cast<int>(rng() % len);
      for (int i = 0; i < len; ++i) byline.push_back(i == pos ? "a1" : "o" + std::to_string(p) + "_" + std::to_string(i));
      papers.push_back(paper("p" + std::to_string(p), byline, {"d1"}));
      std::vector<float> v(16), s(16);
      const float c = 0.5f + static_cast<float>(rng() % 100) / 10.0f;
      for (int d = 0; d < 16; ++d) {
        v[d] = g(rng);
        s[d] = v[d] * c;
      }
      vecs.add(papers.back().paper_id, v);
      scaled.add(papers.back().paper_id, s);
    }
    auto reversed = papers;
    std::reverse(reversed.begin(), reversed.end());
    const auto snap = build_snapshot(papers, {author("a1")}, {{"d1", "D", ""}});
    const auto snap_rev = build_snapshot(reversed, {author("a1")}, {{"d1", "D", ""}});

    auto v = aggregate_author_embedding("a1", snap, vecs);
    ASSERT_TRUE(v);
    EXPECT_NEAR(norm(*v), 1.0, 1e-6);
    auto w = aggregate_author_embedding("a1", snap_rev, vecs);
    ASSERT_TRUE(w);
    for (int d = 0; d < 16; ++d) EXPECT_NEAR((*v)[d], (*w)[d], 1e-6);

    auto dv = aggregate_dataset_embedding("d1", snap, vecs);
    ASSERT_TRUE(dv);
    EXPECT_NEAR(norm(*dv), 1.0, 1e-6);

    // Scaling every paper by the same constant leaves the direction unchanged.
    EmbeddingTable uniform(16);
    for (std::size_t r = 0; r < vecs.size(); ++r) {
      std::vector<float> s(vecs.row(r).begin(), vecs.row(r).end());
      for (auto& x : s) x *= 3.5f;
      uniform.add(vecs.id(r), s);
    }
    auto u = aggregate_author_embedding("a1", snap, uniform);
    ASSERT_TRUE(u);
    for (int d = 0; d < 16; ++d) EXPECT_NEAR((*v)[d], (*u)[d], 1e-5);
  }
}

TEST(EmbeddingStore, FixtureStoreIsSortedAndUnit) {
  const auto snap = test_support::corpus_fixture();
  EmbeddingTable vecs(3);
  vecs.add("p1", std::vector<float>{1, 0, 0});
  vecs.add("p2", std::vector<float>{0, 1, 0});
  vecs.add("p4", std::vector<float>{0, 0, 1});
  vecs.add("p6", std::vector<float>{1, 1, 0});
  const auto store = build_embedding_store(snap, vecs);
  EXPECT_EQ(store.authors.ids(), (std::vector<std::string>{"a1", "a2", "a3", "a4"}));
  EXPECT_EQ(store.datasets.ids(), (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(store.authors_without_evidence, 0u);
  for (std::size_t r = 0; r < store.authors.size(); ++r) {
    std::vector<float> v(store.authors.row(r).begin(), store.authors.row(r).end());
    EXPECT_NEAR(norm(v), 1.0, 1e-6);
  }
}

TEST(EmbeddingTable, RejectsBadRows) {
  EmbeddingTable t(2);
  t.add("x", std::vector<float>{1, 2});
  EXPECT_THROW(t.add("x", std::vector<float>{1, 2}), std::invalid_argument);
  EXPECT_THROW(t.add("y", std::vector<float>{1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(t.add("z", std::vector<float>{1, NAN}), std::invalid_argument);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.find("x"), 0u);
  EXPECT_FALSE(t.find("y"));
}

TEST(Emb1, RoundTripIsBitExact) {
  const auto t = test_support::random_unit_table(50, 7, 3);
  const auto bytes = encode_emb1(t);
  EXPECT_EQ(bytes.size(), 4u + 4u + 8u + 50u * (2u + 6u + 7u * 4u));
  EXPECT_EQ(read_emb1(bytes), t);
  test_support::TempDir dir("emb");
  write_emb1(t, dir / "t.emb1");
  EXPECT_EQ(read_emb1(dir / "t.emb1"), t);
}

TEST(Emb1, HeaderLayoutIsLittleEndian) {
  EmbeddingTable t(3);
  t.add("ab", std::vector<float>{1.0f, -2.0f, 0.5f});
  const auto b = encode_emb1(t);
  ASSERT_EQ(b.size(), 4u + 4u + 8u + 2u + 2u + 12u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "EMB1");
  EXPECT_EQ(b[4], 3);
  EXPECT_EQ(b[8], 1);
  EXPECT_EQ(b[16], 2);
  EXPECT_EQ(b[17], 0);
  float f;
  std::memcpy(&f, &b[20 + 4], 4);
  EXPECT_EQ(f, -2.0f);
}

TEST(Emb1, NaNNamesTheRecord) {
  EmbeddingTable t(2);
  t.add("good", std::vector<float>{1, 0});
  t.add("bad1", std::vector<float>{0, 1});
  auto b = encode_emb1(t);
  const float nan = NAN;
  std::memcpy(&b[b.size() - 4], &nan, 4);
  try {
    read_emb1(b);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("\"bad1\""), std::string::npos) << e.what();
  }
}

TEST(Emb1, TruncationReportsByteOffset) {
  const auto t = test_support::random_unit_table(3, 4, 1);
  auto b = encode_emb1(t);
  b.resize(b.size() - 5);
  try {
    read_emb1(b);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos) << e.what();
  }
}

TEST(Emb1, BadMagicAndTrailingBytes) {
  const auto t = test_support::random_unit_table(2, 4, 1);
  auto b = encode_emb1(t);
  auto bad = b;
  bad[0] = 'X';
  EXPECT_THROW(read_emb1(bad), FormatError);
  b.push_back(0);
  EXPECT_THROW(read_emb1(b), FormatError);
  EXPECT_THROW(read_emb1(std::filesystem::path("/nonexistent/x.emb1")), FormatError);
}
