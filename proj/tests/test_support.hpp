#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"
#include "semspace/corpus.hpp"
#include "semspace/embedding.hpp"

namespace test_support {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(SEMSPACE_FIXTURE_DIR) / rel; }

inline semspace::CorpusSnapshot corpus_fixture() {
  return semspace::load_corpus(fixture("corpus/papers.jsonl"), fixture("corpus/authors.jsonl"),
                               fixture("corpus/datasets.jsonl"));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("semspace-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random unit vectors, ids "r00000", ...
inline semspace::EmbeddingTable random_unit_table(std::size_t n, std::size_t dim, std::uint64_t seed,
                                                  const std::string& prefix = "r") {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  semspace::EmbeddingTable t(dim);
  t.reserve(n);
  std::vector<float> v(dim);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (auto& x : v) {
      x = g(rng);
      norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x = static_cast<float>(x / norm);
    std::snprintf(id, sizeof(id), "%s%05zu", prefix.c_str(), i);
    t.add(id, v);
  }
  return t;
}

inline semspace::EmbeddingTable vectors_from_jsonl(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  semspace::EmbeddingTable t;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    auto v = j.at("vector").get<std::vector<float>>();
    if (first) {
      t = semspace::EmbeddingTable(v.size());
      first = false;
    }
    t.add(j.at("id").get<std::string>(), v);
  }
  return t;
}

}  // namespace test_support
