#include "semspace/justify.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace semspace {

EvidenceBundle select_evidence(const std::string& author_id, const CorpusSnapshot& snapshot) {
  auto author = snapshot.authors.find(author_id);
  auto papers = snapshot.author_paper_index.find(author_id);
  if (author == snapshot.authors.end() || papers == snapshot.author_paper_index.end()) throw UnknownIdError(author_id);

  std::vector<const PaperRecord*> pool;
  for (const auto& pid : papers->second) {
    const auto& p = snapshot.papers.at(pid);
    if (p.year >= kEvidenceSinceYear) pool.push_back(&p);
  }

  EvidenceBundle bundle;
  bundle.author_id = author_id;
  bundle.display_name = author->second.display_name;

  std::sort(pool.begin(), pool.end(), [](const PaperRecord* a, const PaperRecord* b) {
    return std::tie(b->year, b->citation_count, a->paper_id) < std::tie(a->year, a->citation_count, b->paper_id);
  });
  const std::size_t n_recent = std::min(kEvidencePerList, pool.size());
  for (std::size_t i = 0; i < n_recent; ++i) bundle.recent_papers.push_back(*pool[i]);

  std::vector<const PaperRecord*> rest(pool.begin() + static_cast<std::ptrdiff_t>(n_recent), pool.end());
  std::sort(rest.begin(), rest.end(), [](const PaperRecord* a, const PaperRecord* b) {
    return std::tie(b->citation_count, b->year, a->paper_id) < std::tie(a->citation_count, a->year, b->paper_id);
  });
  for (std::size_t i = 0; i < rest.size() && i < kEvidencePerList; ++i) bundle.cited_papers.push_back(*rest[i]);
  return bundle;
}

namespace {

void append_papers(std::ostringstream& out, const std::vector<PaperRecord>& papers, std::size_t& counter) {
  for (const auto& p : papers) {
    out << ++counter << ". \"" << p.title << "\" | journal: " << (p.journal.empty() ? "n/a" : p.journal)
        << " | year: " << p.year << " | citations: " << p.citation_count << "\n";
  }
}

void append_bundle(std::ostringstream& out, const EvidenceBundle& b) {
  std::size_t counter = 0;
  out << "Most recent papers since " << kEvidenceSinceYear << ":\n";
  if (b.recent_papers.empty()) out << "(none)\n";
  append_papers(out, b.recent_papers, counter);
  out << "Most cited papers since " << kEvidenceSinceYear << ":\n";
  if (b.cited_papers.empty()) out << "(none)\n";
  append_papers(out, b.cited_papers, counter);
}

void append_rules(std::ostringstream& out) {
  out << "\nRules:\n"
      << "- Ground every claim only in the papers and descriptions listed above; do not rely on outside knowledge.\n"
      << "- Answer in at most " << kJustificationWordCap << " words.\n";
}

}  // namespace

std::string build_collaborator_prompt(const EvidenceBundle& source, const EvidenceBundle& target) {
  if (source.empty()) throw std::invalid_argument("source author \"" + source.author_id + "\" has no evidence papers");
  if (target.empty()) throw std::invalid_argument("target author \"" + target.author_id + "\" has no evidence papers");
  std::ostringstream out;
  out << "Task: explain why " << target.display_name << " (id " << target.author_id
      << ") would be a promising new collaborator for " << source.display_name << " (id " << source.author_id
      << "). The two researchers have never published together. Highlight the concrete benefits of "
         "collaborating, based on how their work complements or overlaps.\n\n";
  out << "Researcher A: " << source.display_name << "\n";
  append_bundle(out, source);
  out << "\nResearcher B (recommended collaborator): " << target.display_name << "\n";
  append_bundle(out, target);
  append_rules(out);
  return out.str();
}

std::string build_dataset_user_prompt(const EvidenceBundle& author, const DatasetRecord& dataset) {
  if (author.empty()) throw std::invalid_argument("author \"" + author.author_id + "\" has no evidence papers");
  std::ostringstream out;
  out << "Task: explain why " << author.display_name << " (id " << author.author_id
      << ") should consider using the dataset \"" << dataset.name << "\" (id " << dataset.dataset_id
      << "). The researcher has not used this dataset before. Point to the parts of their work that the dataset "
         "could support.\n\n";
  out << "Dataset: " << dataset.name << "\n";
  if (!dataset.description.empty()) out << "Description: " << dataset.description << "\n";
  out << "\nResearcher: " << author.display_name << "\n";
  append_bundle(out, author);
  append_rules(out);
  return out.str();
}

void ProviderConfig::apply_environment() {
  if (endpoint.empty()) {
    if (const char* e = std::getenv("CM_LLM_ENDPOINT")) endpoint = e;
  }
  if (api_key.empty()) {
    if (const char* k = std::getenv("CM_LLM_API_KEY")) api_key = k;
  }
}

namespace {

nlohmann::ordered_json record_to_json(const JustificationRecord& r) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(r.key.kind);
  j["source"] = r.key.source_id;
  j["target"] = r.key.target_id;
  j["text"] = r.text;
  j["model"] = r.model_id;
  j["created_at"] = r.created_at;
  return j;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

JustificationCache::JustificationCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(path_.string() + ": cannot open justification cache");
  auto map = std::make_shared<Map>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      JustificationRecord r;
      r.key.kind = recommendation_kind_from_string(j.at("kind").get<std::string>());
      r.key.source_id = j.at("source").get<std::string>();
      r.key.target_id = j.at("target").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.model_id = j.value("model", "");
      r.created_at = j.value("created_at", "");
      if (r.text.empty()) continue;
      (*map)[r.key] = std::move(r);
    } catch (const std::exception& e) {
      // A torn final line from a crash is tolerated; anything else is not.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw CorpusError(path_.string(), line_no, e.what());
    }
  }
  records_ = std::move(map);
}

std::optional<JustificationRecord> JustificationCache::find(const JustificationKey& key) const {
  const auto snapshot = std::atomic_load(&records_);
  auto it = snapshot->find(key);
  if (it == snapshot->end()) return std::nullopt;
  return it->second;
}

std::size_t JustificationCache::size() const { return std::atomic_load(&records_)->size(); }

void JustificationCache::store(const JustificationRecord& record) {
  if (record.text.empty()) throw std::invalid_argument("refusing to cache an empty justification");
  std::lock_guard lock(write_mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(path_.string() + ": cannot append to justification cache");
    out << record_to_json(record).dump() << "\n";
    out.flush();
  }
  auto next = std::make_shared<Map>(*std::atomic_load(&records_));
  (*next)[record.key] = record;
  std::atomic_store(&records_, std::shared_ptr<const Map>(std::move(next)));
}

JustificationGateway::JustificationGateway(ProviderConfig config, std::unique_ptr<LlmProvider> provider,
                                           std::filesystem::path cache_path)
    : config_(std::move(config)), provider_(std::move(provider)), cache_(std::move(cache_path)) {
  if (!provider_) throw std::invalid_argument("justification gateway needs a provider");
  if (config_.max_concurrent == 0) config_.max_concurrent = 1;
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

FetchResult JustificationGateway::fetch(const JustificationKey& key, const std::string& prompt) {
  if (auto hit = cache_.find(key)) return {std::move(*hit), CacheStatus::hit};

  std::promise<JustificationRecord> promise;
  {
    std::unique_lock lock(inflight_mutex_);
    if (auto hit = cache_.find(key)) return {std::move(*hit), CacheStatus::hit};
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      auto future = it->second;
      lock.unlock();
      return {future.get(), CacheStatus::coalesced};
    }
    if (admitted_ >= config_.max_concurrent + config_.queue_capacity)
      throw GatewayBusy("justification queue is full (" + std::to_string(admitted_) + " requests pending)");
    ++admitted_;
    inflight_.emplace(key, promise.get_future().share());
  }

  auto finish = [&] {
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    --admitted_;
  };

  try {
    {
      std::unique_lock slot(slot_mutex_);
      slot_cv_.wait(slot, [&] { return running_ < config_.max_concurrent; });
      ++running_;
    }
    JustificationRecord record;
    try {
      record = call_with_retries(key, prompt);
    } catch (...) {
      {
        std::lock_guard slot(slot_mutex_);
        --running_;
      }
      slot_cv_.notify_one();
      throw;
    }
    {
      std::lock_guard slot(slot_mutex_);
      --running_;
    }
    slot_cv_.notify_one();
    cache_.store(record);
    promise.set_value(record);
    finish();
    return {std::move(record), CacheStatus::miss};
  } catch (...) {
    promise.set_exception(std::current_exception());
    finish();
    throw;
  }
}

JustificationRecord JustificationGateway::call_with_retries(const JustificationKey& key, const std::string& prompt) {
  ChatRequest request;
  request.model = config_.model;
  request.messages = {
      {"system", "You write short, evidence-grounded explanations for research recommendations."},
      {"user", prompt},
  };

  thread_local std::mt19937_64 jitter_rng(std::random_device{}());
  std::uniform_real_distribution<double> jitter(0.0, config_.jitter);
  for (int attempt = 1;; ++attempt) {
    try {
      ++upstream_calls_;
      ChatResponse response = provider_->complete(key, request);
      if (response.text.empty()) throw ProviderError(ProviderError::Kind::malformed, "provider returned empty text");
      JustificationRecord record;
      record.key = key;
      record.text = std::move(response.text);
      record.model_id = config_.model;
      record.created_at = utc_now();
      record.prompt_tokens = response.prompt_tokens;
      record.completion_tokens = response.completion_tokens;
      return record;
    } catch (const ProviderError& e) {
      if (!e.retriable() || attempt >= config_.max_attempts) throw ProviderError(e.kind(), e.what(), attempt);
      const double scale = static_cast<double>(1u << (attempt - 1)) * (1.0 + jitter(jitter_rng));
      std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(config_.backoff_base * scale));
    }
  }
}

FetchResult justify(const JustificationKey& key, const CorpusSnapshot& snapshot, JustificationGateway& gateway) {
  std::string prompt;
  if (key.kind == RecommendationKind::collaborator) {
    if (!snapshot.authors.count(key.source_id)) throw UnknownIdError(key.source_id);
    if (!snapshot.authors.count(key.target_id)) throw UnknownIdError(key.target_id);
    prompt = build_collaborator_prompt(select_evidence(key.source_id, snapshot), select_evidence(key.target_id, snapshot));
  } else {
    auto dataset = snapshot.datasets.find(key.source_id);
    if (dataset == snapshot.datasets.end()) throw UnknownIdError(key.source_id);
    if (!snapshot.authors.count(key.target_id)) throw UnknownIdError(key.target_id);
    prompt = build_dataset_user_prompt(select_evidence(key.target_id, snapshot), dataset->second);
  }
  return gateway.fetch(key, prompt);
}

}  // namespace semspace
