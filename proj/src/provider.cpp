#include <cctype>
#include <cstdio>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "semspace/justify.hpp"

namespace semspace {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::size_t word_count(const std::string& s) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

std::string mock_justification_text(const JustificationKey& key) {
  std::uint64_t h = fnv1a(to_string(key.kind));
  h = fnv1a("\x1f", h);
  h = fnv1a(key.source_id, h);
  h = fnv1a("\x1f", h);
  h = fnv1a(key.target_id, h);

  static const char* const openers[] = {"Their recent work overlaps", "Both groups publish", "The evidence papers show",
                                        "The listed publications point to"};
  static const char* const benefits[] = {"shared methods that could be combined", "complementary expertise",
                                         "a common set of biological questions", "data and analysis needs that align"};
  char tag[17];
  std::snprintf(tag, sizeof(tag), "%016llx", static_cast<unsigned long long>(h));
  std::string text = std::string(openers[h % 4]) + " on " + benefits[(h >> 8) % 4] + ". ";
  if (key.kind == RecommendationKind::collaborator)
    text += "A collaboration between " + key.source_id + " and " + key.target_id + " is suggested by this overlap.";
  else
    text += "Researcher " + key.target_id + " could build on dataset " + key.source_id + ".";
  text += " [mock " + std::string(tag) + "]";
  return text;
}

ChatResponse MockProvider::complete(const JustificationKey& key, const ChatRequest& request) {
  ++calls_;
  ChatResponse r;
  r.text = mock_justification_text(key);
  for (const auto& m : request.messages) r.prompt_tokens += static_cast<std::int64_t>(word_count(m.content));
  r.completion_tokens = static_cast<std::int64_t>(word_count(r.text));
  return r;
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?://[^/\s]+)(/\S*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url))
    throw std::invalid_argument("provider endpoint must be an absolute http(s) URL, got \"" + config_.endpoint + "\"");
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

ChatResponse HttpProvider::complete(const JustificationKey&, const ChatRequest& request) {
  using Kind = ProviderError::Kind;
  nlohmann::json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw ProviderError(Kind::transient, "provider request failed: " + httplib::to_string(res.error()));
  const int status = res->status;
  const std::string where = "provider returned HTTP " + std::to_string(status);
  if (status == 401 || status == 403) throw ProviderError(Kind::auth, where + " (check CM_LLM_API_KEY)");
  if (status == 408 || status == 429 || status >= 500) throw ProviderError(Kind::transient, where);
  if (status < 200 || status >= 300) throw ProviderError(Kind::rejected, where);

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(Kind::malformed, std::string("provider response is not JSON: ") + e.what());
  }
  ChatResponse out;
  try {
    const auto& text = reply.at(nlohmann::json::json_pointer(config_.response_path));
    if (!text.is_string()) throw ProviderError(Kind::malformed, "provider response text is not a string");
    out.text = text.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ProviderError(Kind::malformed, "provider response has no value at " + config_.response_path);
  }
  if (out.text.empty()) throw ProviderError(Kind::malformed, "provider returned empty text");
  if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
    out.prompt_tokens = usage->value("prompt_tokens", 0LL);
    out.completion_tokens = usage->value("completion_tokens", 0LL);
  }
  return out;
}

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& config) {
  if (config.mock) return std::make_unique<MockProvider>();
  if (config.endpoint.empty())
    throw std::invalid_argument("no provider endpoint configured; set CM_LLM_ENDPOINT or use --mock-llm");
  return std::make_unique<HttpProvider>(config);
}

}  // namespace semspace
