// Deterministic synthetic corpus: topic-clustered authors, papers with
// byline structure, dataset usage and per-paper vectors.
//
//   synth_corpus --output-dir data/synth [--authors 5600] [--papers 16000]
//                [--datasets 80] [--topics 40] [--dim 768] [--seed 7]

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "semspace/embedding.hpp"

namespace {

const char* const kFirst[] = {"Ada",   "Ben",   "Chen",  "Dana",  "Elif",  "Farid", "Grace", "Hiro",  "Ines",
                              "Jonas", "Kiran", "Lena",  "Mateo", "Nadia", "Omar",  "Priya", "Quinn", "Rosa",
                              "Sven",  "Tara",  "Uma",   "Viktor", "Wen",  "Ximena", "Yusuf", "Zoe"};
const char* const kLast[] = {"Abara",  "Berg",    "Castro", "Diallo", "Eriksen", "Fischer", "Garcia", "Huang",
                             "Ivanov", "Jensen",  "Kim",    "Lopez",  "Moreau",  "Nakamura", "Okafor", "Patel",
                             "Quist",  "Rossi",   "Singh",  "Tanaka", "Ueda",    "Varga",   "Wang",   "Xu",
                             "Yilmaz", "Zhang"};
const char* const kTopics[] = {"protein interaction", "single-cell imaging", "gene regulation", "CRISPR screening",
                               "cell maps",           "proteomics",          "cancer genomics", "network biology",
                               "metabolic modeling",  "drug response"};
const char* const kJournals[] = {"Cell Systems", "Nature Methods", "Bioinformatics", "Molecular Systems Biology",
                                 "Genome Research", ""};

std::vector<float> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

std::string padded(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, i);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic corpus generator"};
  std::string out_dir;
  std::size_t n_authors = 5600, n_papers = 16000, n_datasets = 80, n_topics = 40, dim = semspace::kDefaultDimension;
  std::uint64_t seed = 7;
  app.add_option("--output-dir", out_dir, "Destination directory")->required();
  app.add_option("--authors", n_authors)->check(CLI::Range(20, 1000000));
  app.add_option("--papers", n_papers)->check(CLI::Range(20, 10000000));
  app.add_option("--datasets", n_datasets)->check(CLI::Range(2, 100000));
  app.add_option("--topics", n_topics)->check(CLI::Range(2, 10000));
  app.add_option("--dim", dim)->check(CLI::Range(2, 4096));
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::vector<std::vector<double>> centers(n_topics, std::vector<double>(dim));
  for (auto& c : centers)
    for (auto& x : c) x = gauss(rng);

  std::vector<std::size_t> author_topic(n_authors);
  std::vector<std::vector<std::size_t>> by_topic(n_topics);
  for (std::size_t a = 0; a < n_authors; ++a) {
    author_topic[a] = pick(n_topics);
    by_topic[author_topic[a]].push_back(a);
  }
  // ~4% of authors only publish before the activity cutoff.
  std::vector<bool> inactive(n_authors);
  for (std::size_t a = 100; a < n_authors; ++a) inactive[a] = unif(rng) < 0.04;

  std::vector<std::size_t> dataset_topic(n_datasets);
  for (auto& t : dataset_topic) t = pick(n_topics);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  {
    std::ofstream out(dir / "authors.jsonl");
    for (std::size_t a = 0; a < n_authors; ++a) {
      nlohmann::ordered_json j;
      j["id"] = padded("A", a);
      j["name"] = a == 0 ? std::string("Trey Ideker")
                         : std::string(kFirst[a % 26]) + " " + kLast[(a / 26) % 26] + (a >= 676 ? " " + std::to_string(a / 676) : "");
      j["institution"] = "Institute " + std::to_string(author_topic[a] % 17);
      if (a % 3 != 0) j["career_start_year"] = 1990 + static_cast<int>(pick(30));
      j["is_core"] = a < 100;
      if (a % 5 == 0) j["detail_url"] = "https://example.org/talent/" + padded("A", a);
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir / "datasets.jsonl");
    for (std::size_t d = 0; d < n_datasets; ++d) {
      nlohmann::ordered_json j;
      j["id"] = padded("D", d);
      const char* topic = kTopics[dataset_topic[d] % 10];
      j["name"] = d == 0 ? std::string("CRISPR Screening Data") : std::string(topic) + " atlas " + std::to_string(d);
      j["description"] = d % 7 == 3 ? std::string()
                                    : "Curated " + std::string(topic) + " measurements released for reuse (set " +
                                          std::to_string(d) + ").";
      out << j.dump() << "\n";
    }
  }

  semspace::EmbeddingTable vectors(dim);
  vectors.reserve(n_papers);
  std::ofstream papers(dir / "papers.jsonl");
  for (std::size_t p = 0; p < n_papers; ++p) {
    // Every author leads at least one paper; the rest pick a random lead.
    const std::size_t lead = p < n_authors ? p : pick(n_authors);
    const std::size_t topic = author_topic[lead];
    const auto& pool = by_topic[topic];
    std::vector<std::string> byline{padded("A", lead)};
    std::set<std::size_t> used{lead};
    const std::size_t extra = pick(7);
    for (std::size_t e = 0; e < extra; ++e) {
      std::size_t co = unif(rng) < 0.85 ? pool[pick(pool.size())] : pick(n_authors);
      if (used.insert(co).second) byline.push_back(padded("A", co));
    }
    if (unif(rng) < 0.05) byline.push_back(padded("X", p));  // collaborator without a profile

    bool any_inactive = false;
    for (auto a : used) any_inactive = any_inactive || inactive[a];
    const int year = any_inactive ? 2008 + static_cast<int>(pick(13)) : 2012 + static_cast<int>(pick(13));

    std::vector<std::string> ds;
    for (std::size_t d = 0; d < n_datasets; ++d) {
      if (dataset_topic[d] == topic && unif(rng) < 0.08) ds.push_back(padded("D", d));
    }

    nlohmann::ordered_json j;
    j["id"] = padded("P", p);
    j["title"] = "On " + std::string(kTopics[topic % 10]) + " study " + std::to_string(p);
    j["abstract"] = p % 4 == 0 ? "" : "Synthetic abstract for paper " + std::to_string(p) + ".";
    j["year"] = year;
    j["journal"] = kJournals[pick(6)];
    j["citations"] = static_cast<long long>(std::floor(std::exp(unif(rng) * 6.0))) - 1;
    j["authors"] = byline;
    j["datasets"] = ds;
    papers << j.dump() << "\n";

    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = centers[topic][d] + 0.6 * gauss(rng);
    vectors.add(padded("P", p), unit(std::move(v)));
  }
  papers.close();
  semspace::write_emb1(vectors, dir / "paper_embeddings.emb1");
  std::printf("wrote %zu authors, %zu papers, %zu datasets (D=%zu) to %s\n", n_authors, n_papers, n_datasets, dim,
              out_dir.c_str());
  return 0;
}
