#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace semspace {

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string abstract;
  int year = 0;
  std::string journal;
  long long citation_count = 0;
  std::vector<std::string> author_ids;  // byline order
  std::vector<std::string> dataset_ids;  // sorted, unique

  bool operator==(const PaperRecord&) const = default;
};

struct AuthorRecord {
  std::string author_id;
  std::string display_name;
  std::string institution;
  std::optional<int> career_start_year;
  bool is_core = false;
  std::optional<std::string> detail_url;

  bool operator==(const AuthorRecord&) const = default;
};

struct DatasetRecord {
  std::string dataset_id;
  std::string name;
  std::string description;

  bool operator==(const DatasetRecord&) const = default;
};

using IdSet = std::set<std::string>;

/// Validated, indexed view of the corpus. Built once by load_corpus() and
/// shared read-only (see SnapshotPtr) by every later stage.
///
/// Indexes only mention retained authors. Papers keep their full byline,
/// including authors that were filtered out or never had a profile, because
/// byline positions drive the embedding weights.
struct CorpusSnapshot {
  std::map<std::string, PaperRecord> papers;
  std::map<std::string, AuthorRecord> authors;
  std::map<std::string, DatasetRecord> datasets;

  std::map<std::string, IdSet> coauthor_index;
  std::map<std::string, IdSet> dataset_user_index;
  std::map<std::string, std::vector<std::string>> author_paper_index;
  std::map<std::string, std::size_t> publication_count;

  bool operator==(const CorpusSnapshot&) const = default;
};

using SnapshotPtr = std::shared_ptr<const CorpusSnapshot>;

inline constexpr int kDefaultActivityCutoffYear = 2020;

/// Parses the three record files and builds the snapshot.
///
/// Authors are retained when they have at least one paper with
/// year > activity_cutoff_year, or when they are flagged as core researchers.
/// Throws CorpusError on a malformed line, a duplicate id or a paper that
/// references an unknown dataset.
CorpusSnapshot load_corpus(const std::filesystem::path& papers_path,
                           const std::filesystem::path& authors_path,
                           const std::filesystem::path& datasets_path,
                           int activity_cutoff_year = kDefaultActivityCutoffYear);

/// Same as load_corpus() over already-parsed records.
CorpusSnapshot build_snapshot(std::vector<PaperRecord> papers, std::vector<AuthorRecord> authors,
                              std::vector<DatasetRecord> datasets,
                              int activity_cutoff_year = kDefaultActivityCutoffYear);

/// Lists every broken snapshot invariant. Empty iff the snapshot is sound.
std::vector<std::string> validate_snapshot(const CorpusSnapshot& snapshot);

/// Canonical JSON text of the snapshot; identical inputs give identical bytes.
std::string serialize_snapshot(const CorpusSnapshot& snapshot);
CorpusSnapshot deserialize_snapshot(const std::string& text);

void write_snapshot(const CorpusSnapshot& snapshot, const std::filesystem::path& path);
CorpusSnapshot read_snapshot(const std::filesystem::path& path);

}  // namespace semspace
