#include <algorithm>
#include <tuple>

#include "semspace/spatial.hpp"

namespace semspace {

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

NameIndex::NameIndex(const CorpusSnapshot& snapshot, const IdSet* restrict_to) {
  auto wanted = [&](const std::string& id) { return restrict_to == nullptr || restrict_to->count(id) > 0; };
  for (const auto& [id, a] : snapshot.authors) {
    if (wanted(id)) entries_.push_back({{id, a.display_name, NodeKind::talent}, fold_case(a.display_name)});
  }
  for (const auto& [id, d] : snapshot.datasets) {
    if (wanted(id)) entries_.push_back({{id, d.name, NodeKind::dataset}, fold_case(d.name)});
  }
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.folded, a.hit.display_name, a.hit.node_id) < std::tie(b.folded, b.hit.display_name, b.hit.node_id);
  });
}

std::vector<SearchHit> NameIndex::search(const std::string& query, std::optional<NodeKind> kind, std::size_t limit,
                                         std::size_t offset) const {
  std::vector<SearchHit> out;
  if (query.empty() || limit == 0) return out;
  const std::string q = fold_case(query);

  // entries_ is already in tie-break order, so a stable bucket pass per
  // match class yields the final ranking.
  std::vector<const Entry*> buckets[3];
  for (const auto& e : entries_) {
    if (kind && e.hit.kind != *kind) continue;
    const auto pos = e.folded.find(q);
    if (pos == std::string::npos) continue;
    const int cls = e.folded.size() == q.size() ? 0 : (pos == 0 ? 1 : 2);
    buckets[cls].push_back(&e);
  }
  std::size_t skipped = 0;
  for (const auto& bucket : buckets) {
    for (const Entry* e : bucket) {
      if (skipped < offset) {
        ++skipped;
        continue;
      }
      if (out.size() >= limit) return out;
      out.push_back(e->hit);
    }
  }
  return out;
}

}  // namespace semspace
