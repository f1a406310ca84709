#include "semspace/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "semspace/error.hpp"

namespace semspace {

using nlohmann::json;

namespace {

// Reads one JSON object per line and hands it to `parse` together with its
// 1-based line number. Blank lines are skipped.
template <typename Parse>
void for_each_record(const std::filesystem::path& path, Parse&& parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path.string(), 0, "cannot open file");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(path.string(), line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw CorpusError(path.string(), line_no, "record is not a JSON object");
    try {
      parse(obj);
    } catch (const CorpusError&) {
      throw;
    } catch (const std::exception& e) {
      throw CorpusError(path.string(), line_no, e.what());
    }
  }
}

std::string require_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw std::invalid_argument(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw std::invalid_argument(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

long long require_integer(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
  if (!it->is_number_integer()) throw std::invalid_argument(std::string("field \"") + key + "\" must be an integer");
  return it->get<long long>();
}

std::vector<std::string> string_array(const json& obj, const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
    return {};
  }
  if (!it->is_array()) throw std::invalid_argument(std::string("field \"") + key + "\" must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string() || v.get_ref<const std::string&>().empty())
      throw std::invalid_argument(std::string("field \"") + key + "\" must hold non-empty strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool is_absolute_url(const std::string& s) {
  static const std::regex pattern(R"(^[A-Za-z][A-Za-z0-9+.\-]*://[^\s]+$)");
  return std::regex_match(s, pattern);
}

PaperRecord parse_paper(const json& obj) {
  PaperRecord p;
  p.paper_id = require_string(obj, "id");
  if (p.paper_id.empty()) throw std::invalid_argument("empty paper id");
  p.title = require_string(obj, "title");
  p.abstract = optional_string(obj, "abstract");
  const long long year = require_integer(obj, "year");
  if (year < 1900 || year > 2100) throw std::invalid_argument("year out of range [1900, 2100]");
  p.year = static_cast<int>(year);
  p.journal = optional_string(obj, "journal");
  p.citation_count = require_integer(obj, "citations");
  if (p.citation_count < 0) throw std::invalid_argument("negative citation count");
  p.author_ids = string_array(obj, "authors", true);
  if (p.author_ids.empty()) throw std::invalid_argument("paper has no authors");
  std::unordered_set<std::string> seen;
  for (const auto& a : p.author_ids) {
    if (!seen.insert(a).second) throw std::invalid_argument("author \"" + a + "\" listed twice in byline");
  }
  p.dataset_ids = string_array(obj, "datasets", false);
  std::sort(p.dataset_ids.begin(), p.dataset_ids.end());
  p.dataset_ids.erase(std::unique(p.dataset_ids.begin(), p.dataset_ids.end()), p.dataset_ids.end());
  return p;
}

AuthorRecord parse_author(const json& obj) {
  AuthorRecord a;
  a.author_id = require_string(obj, "id");
  if (a.author_id.empty()) throw std::invalid_argument("empty author id");
  a.display_name = require_string(obj, "name");
  a.institution = optional_string(obj, "institution");
  if (auto it = obj.find("career_start_year"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw std::invalid_argument("field \"career_start_year\" must be an integer");
    a.career_start_year = it->get<int>();
  }
  if (auto it = obj.find("is_core"); it != obj.end() && !it->is_null()) {
    if (!it->is_boolean()) throw std::invalid_argument("field \"is_core\" must be a boolean");
    a.is_core = it->get<bool>();
  }
  if (auto it = obj.find("detail_url"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("field \"detail_url\" must be a string");
    auto url = it->get<std::string>();
    if (!is_absolute_url(url)) throw std::invalid_argument("detail_url is not an absolute URL: " + url);
    a.detail_url = std::move(url);
  }
  return a;
}

DatasetRecord parse_dataset(const json& obj) {
  DatasetRecord d;
  d.dataset_id = require_string(obj, "id");
  if (d.dataset_id.empty()) throw std::invalid_argument("empty dataset id");
  d.name = require_string(obj, "name");
  if (d.name.empty()) throw std::invalid_argument("dataset name is empty");
  d.description = optional_string(obj, "description");
  return d;
}

template <typename Record, typename Parse, typename Key>
std::vector<Record> read_records(const std::filesystem::path& path, Parse parse, Key key) {
  std::vector<Record> out;
  std::unordered_set<std::string> ids;
  for_each_record(path, [&](const json& obj) {
    Record r = parse(obj);
    if (!ids.insert(key(r)).second) throw std::invalid_argument("duplicate id \"" + key(r) + "\"");
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace

CorpusSnapshot load_corpus(const std::filesystem::path& papers_path,
                           const std::filesystem::path& authors_path,
                           const std::filesystem::path& datasets_path, int activity_cutoff_year) {
  auto papers = read_records<PaperRecord>(papers_path, parse_paper,
                                          [](const PaperRecord& p) { return p.paper_id; });
  auto authors = read_records<AuthorRecord>(authors_path, parse_author,
                                            [](const AuthorRecord& a) { return a.author_id; });
  auto datasets = read_records<DatasetRecord>(datasets_path, parse_dataset,
                                              [](const DatasetRecord& d) { return d.dataset_id; });

  std::unordered_set<std::string> dataset_ids;
  for (const auto& d : datasets) dataset_ids.insert(d.dataset_id);
  for (std::size_t i = 0; i < papers.size(); ++i) {
    for (const auto& d : papers[i].dataset_ids) {
      if (!dataset_ids.count(d)) {
        throw CorpusError(papers_path.string(), 0,
                          "paper \"" + papers[i].paper_id + "\" references unknown dataset \"" + d + "\"");
      }
    }
  }
  return build_snapshot(std::move(papers), std::move(authors), std::move(datasets), activity_cutoff_year);
}

CorpusSnapshot build_snapshot(std::vector<PaperRecord> papers, std::vector<AuthorRecord> authors,
                              std::vector<DatasetRecord> datasets, int activity_cutoff_year) {
  CorpusSnapshot s;
  for (auto& d : datasets) {
    const auto id = d.dataset_id;
    if (!s.datasets.emplace(id, std::move(d)).second)
      throw CorpusError("datasets", 0, "duplicate dataset id \"" + id + "\"");
  }
  for (auto& p : papers) {
    for (const auto& d : p.dataset_ids) {
      if (!s.datasets.count(d))
        throw CorpusError("papers", 0, "paper \"" + p.paper_id + "\" references unknown dataset \"" + d + "\"");
    }
    const auto id = p.paper_id;
    if (!s.papers.emplace(id, std::move(p)).second)
      throw CorpusError("papers", 0, "duplicate paper id \"" + id + "\"");
  }

  std::map<std::string, AuthorRecord> all_authors;
  for (auto& a : authors) {
    const auto id = a.author_id;
    if (!all_authors.emplace(id, std::move(a)).second)
      throw CorpusError("authors", 0, "duplicate author id \"" + id + "\"");
  }

  IdSet active;
  for (const auto& [pid, p] : s.papers) {
    if (p.year <= activity_cutoff_year) continue;
    for (const auto& a : p.author_ids) active.insert(a);
  }
  for (auto& [id, a] : all_authors) {
    if (a.is_core || active.count(id)) s.authors.emplace(id, std::move(a));
  }

  for (const auto& [id, a] : s.authors) {
    s.coauthor_index[id];
    s.author_paper_index[id];
  }
  for (const auto& [id, d] : s.datasets) s.dataset_user_index[id];

  std::vector<const std::string*> retained;
  for (const auto& [pid, p] : s.papers) {
    retained.clear();
    for (const auto& a : p.author_ids) {
      if (s.authors.count(a)) retained.push_back(&a);
    }
    for (const auto* a : retained) {
      s.author_paper_index[*a].push_back(pid);
      for (const auto* b : retained) {
        if (a != b) s.coauthor_index[*a].insert(*b);
      }
      for (const auto& d : p.dataset_ids) s.dataset_user_index[d].insert(*a);
    }
  }
  for (const auto& [id, list] : s.author_paper_index) s.publication_count[id] = list.size();
  return s;
}

std::vector<std::string> validate_snapshot(const CorpusSnapshot& s) {
  std::vector<std::string> out;
  auto report = [&](std::string msg) { out.push_back(std::move(msg)); };

  for (const auto& [id, p] : s.papers) {
    if (id != p.paper_id) report("paper key \"" + id + "\" does not match record id \"" + p.paper_id + "\"");
    if (p.author_ids.empty()) report("paper \"" + id + "\" has an empty byline");
    std::set<std::string> seen;
    for (const auto& a : p.author_ids) {
      if (!seen.insert(a).second) report("paper \"" + id + "\" lists author \"" + a + "\" twice");
    }
    if (p.citation_count < 0) report("paper \"" + id + "\" has a negative citation count");
    if (p.year < 1900 || p.year > 2100) report("paper \"" + id + "\" has year out of range");
    for (const auto& d : p.dataset_ids) {
      if (!s.datasets.count(d)) report("paper \"" + id + "\" references unknown dataset \"" + d + "\"");
    }
  }
  for (const auto& [id, a] : s.authors) {
    if (id != a.author_id) report("author key \"" + id + "\" does not match record id \"" + a.author_id + "\"");
  }
  for (const auto& [id, d] : s.datasets) {
    if (id != d.dataset_id) report("dataset key \"" + id + "\" does not match record id \"" + d.dataset_id + "\"");
    if (d.name.empty()) report("dataset \"" + id + "\" has an empty name");
  }

  for (const auto& [a, peers] : s.coauthor_index) {
    if (!s.authors.count(a)) report("coauthor_index key \"" + a + "\" is not a known author");
    for (const auto& b : peers) {
      if (b == a) {
        report("coauthor_index is reflexive for author \"" + a + "\"");
        continue;
      }
      if (!s.authors.count(b)) report("coauthor_index[\"" + a + "\"] references unknown author \"" + b + "\"");
      auto back = s.coauthor_index.find(b);
      if (back == s.coauthor_index.end() || !back->second.count(a))
        report("coauthor_index is asymmetric: \"" + b + "\" in [\"" + a + "\"] but \"" + a + "\" not in [\"" + b +
               "\"]");
    }
  }
  for (const auto& [d, users] : s.dataset_user_index) {
    if (!s.datasets.count(d)) report("dataset_user_index key \"" + d + "\" is not a known dataset");
    for (const auto& a : users) {
      if (!s.authors.count(a)) report("dataset_user_index[\"" + d + "\"] references unknown author \"" + a + "\"");
    }
  }
  for (const auto& [a, list] : s.author_paper_index) {
    if (!s.authors.count(a)) report("author_paper_index key \"" + a + "\" is not a known author");
    for (const auto& p : list) {
      if (!s.papers.count(p)) report("author_paper_index[\"" + a + "\"] references unknown paper \"" + p + "\"");
    }
  }
  for (const auto& [a, count] : s.publication_count) {
    if (!s.authors.count(a)) report("publication_count key \"" + a + "\" is not a known author");
    auto it = s.author_paper_index.find(a);
    const std::size_t indexed = it == s.author_paper_index.end() ? 0 : it->second.size();
    if (count != indexed)
      report("publication_count[\"" + a + "\"] = " + std::to_string(count) + " but author_paper_index holds " +
             std::to_string(indexed));
  }
  return out;
}

namespace {

json to_json(const PaperRecord& p) {
  return {{"id", p.paper_id},     {"title", p.title},        {"abstract", p.abstract},
          {"year", p.year},       {"journal", p.journal},    {"citations", p.citation_count},
          {"authors", p.author_ids}, {"datasets", p.dataset_ids}};
}

json to_json(const AuthorRecord& a) {
  json j = {{"id", a.author_id}, {"name", a.display_name}, {"institution", a.institution}, {"is_core", a.is_core}};
  j["career_start_year"] = a.career_start_year ? json(*a.career_start_year) : json(nullptr);
  j["detail_url"] = a.detail_url ? json(*a.detail_url) : json(nullptr);
  return j;
}

json to_json(const DatasetRecord& d) {
  return {{"id", d.dataset_id}, {"name", d.name}, {"description", d.description}};
}

template <typename Record>
json records_to_json(const std::map<std::string, Record>& m) {
  json arr = json::array();
  for (const auto& [id, r] : m) arr.push_back(to_json(r));
  return arr;
}

}  // namespace

std::string serialize_snapshot(const CorpusSnapshot& s) {
  json j;
  j["papers"] = records_to_json(s.papers);
  j["authors"] = records_to_json(s.authors);
  j["datasets"] = records_to_json(s.datasets);
  j["coauthor_index"] = s.coauthor_index;
  j["dataset_user_index"] = s.dataset_user_index;
  j["author_paper_index"] = s.author_paper_index;
  j["publication_count"] = s.publication_count;
  return j.dump() + "\n";
}

CorpusSnapshot deserialize_snapshot(const std::string& text) {
  CorpusSnapshot s;
  try {
    const json j = json::parse(text);
    for (const auto& p : j.at("papers")) {
      auto rec = parse_paper(p);
      s.papers.emplace(rec.paper_id, std::move(rec));
    }
    for (const auto& a : j.at("authors")) {
      auto rec = parse_author(a);
      s.authors.emplace(rec.author_id, std::move(rec));
    }
    for (const auto& d : j.at("datasets")) {
      auto rec = parse_dataset(d);
      s.datasets.emplace(rec.dataset_id, std::move(rec));
    }
    j.at("coauthor_index").get_to(s.coauthor_index);
    j.at("dataset_user_index").get_to(s.dataset_user_index);
    j.at("author_paper_index").get_to(s.author_paper_index);
    j.at("publication_count").get_to(s.publication_count);
  } catch (const std::exception& e) {
    throw CorpusError("snapshot", 0, e.what());
  }
  return s;
}

void write_snapshot(const CorpusSnapshot& snapshot, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError(path.string(), 0, "cannot open for writing");
  out << serialize_snapshot(snapshot);
  if (!out) throw CorpusError(path.string(), 0, "write failed");
}

CorpusSnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path.string(), 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_snapshot(buf.str());
  } catch (const CorpusError& e) {
    throw CorpusError(path.string(), 0, e.what());
  }
}

}  // namespace semspace
