#include "semspace/server.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "semspace/error.hpp"

namespace semspace {

using nlohmann::ordered_json;

AppState::AppState(SnapshotPtr snap, std::vector<LayoutPoint> points, RecommendationTable recs)
    : snapshot(std::move(snap)),
      layout(std::move(points)),
      tree(build_quadtree(layout)),
      recommendations(std::move(recs)) {
  if (!snapshot) throw std::invalid_argument("application state needs a snapshot");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (!layout_index.emplace(layout[i].node_id, i).second)
      throw Error("layout contains node \"" + layout[i].node_id + "\" twice");
    layout_ids.insert(layout[i].node_id);
  }
  names = NameIndex(*snapshot, &layout_ids);
}

std::vector<std::string> find_inconsistencies(const CorpusSnapshot& snapshot, const std::vector<LayoutPoint>& layout,
                                              const RecommendationTable& recommendations, std::size_t limit) {
  std::vector<std::string> out;
  auto add = [&](std::string s) {
    if (out.size() < limit) out.push_back(std::move(s));
  };
  for (const auto& p : layout) {
    const bool is_author = snapshot.authors.count(p.node_id) > 0;
    const bool is_dataset = snapshot.datasets.count(p.node_id) > 0;
    if (!is_author && !is_dataset)
      add("layout node " + p.node_id);
    else if ((p.kind == NodeKind::talent) != is_author)
      add("layout node " + p.node_id + " (kind " + to_string(p.kind) + ")");
  }
  for (const auto& [src, list] : recommendations.collaborator_recs) {
    if (!snapshot.authors.count(src)) add("collaborator source " + src);
    for (const auto& e : list)
      if (!snapshot.authors.count(e.target_id)) add("collaborator target " + e.target_id);
  }
  for (const auto& [src, list] : recommendations.dataset_user_recs) {
    if (!snapshot.datasets.count(src)) add("dataset source " + src);
    for (const auto& e : list)
      if (!snapshot.authors.count(e.target_id)) add("dataset-user target " + e.target_id);
  }
  return out;
}

StatePtr load_app_state(const std::filesystem::path& data_dir) {
  auto need = [&](const char* name) {
    const auto path = data_dir / name;
    if (!std::filesystem::exists(path)) throw Error(path.string() + ": required artifact is missing");
    return path;
  };
  const auto snapshot_path = need(kSnapshotFile);
  const auto layout_path = need(kLayoutFile);
  const auto recs_path = need(kRecommendationsFile);

  auto rethrow_named = [](const std::filesystem::path& path, const std::exception& e) -> Error {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) return Error(what);
    return Error(path.string() + ": " + what);
  };

  SnapshotPtr snapshot;
  std::vector<LayoutPoint> layout;
  RecommendationTable recs;
  try {
    snapshot = std::make_shared<const CorpusSnapshot>(read_snapshot(snapshot_path));
  } catch (const std::exception& e) {
    throw rethrow_named(snapshot_path, e);
  }
  try {
    layout = read_lay1(layout_path);
  } catch (const std::exception& e) {
    throw rethrow_named(layout_path, e);
  }
  try {
    recs = read_recommendations(recs_path);
  } catch (const std::exception& e) {
    throw rethrow_named(recs_path, e);
  }

  const auto bad = find_inconsistencies(*snapshot, layout, recs, 20);
  if (!bad.empty()) {
    std::string msg = "artifacts in " + data_dir.string() + " are inconsistent; unresolved ids:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw Error(msg);
  }
  if (layout.empty()) throw Error(layout_path.string() + ": layout has no nodes");
  return std::make_shared<const AppState>(std::move(snapshot), std::move(layout), std::move(recs));
}

namespace {

void format_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  // Trim "1.500000" to "1.5" and "2.000000" to "2.0".
  const auto dot = s.find('.');
  std::size_t end = s.size();
  while (end > dot + 2 && s[end - 1] == '0') --end;
  s.resize(end);
  if (s == "-0.0") s = "0.0";
  out += s;
}

void dump_into(std::string& out, const ordered_json& v) {
  switch (v.type()) {
    case ordered_json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ',';
        first = false;
        out += ordered_json(key).dump();
        out += ':';
        dump_into(out, value);
      }
      out += '}';
      break;
    }
    case ordered_json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& value : v) {
        if (!first) out += ',';
        first = false;
        dump_into(out, value);
      }
      out += ']';
      break;
    }
    case ordered_json::value_t::number_float:
      format_number(out, v.get<double>());
      break;
    default:
      out += v.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
  }
}

ordered_json node_entry(const LayoutPoint& p) {
  return {{"id", p.node_id}, {"x", p.x}, {"y", p.y}, {"kind", to_string(p.kind)}, {"size", p.display_size}};
}

}  // namespace

std::string dump_api_json(const ordered_json& value) {
  std::string out;
  dump_into(out, value);
  return out;
}

ordered_json viewport_payload(const std::vector<LayoutPoint>& points) {
  ordered_json nodes = ordered_json::array();
  for (const auto& p : points) nodes.push_back(node_entry(p));
  return {{"count", points.size()}, {"nodes", std::move(nodes)}};
}

ordered_json search_payload(const std::string& query, const std::vector<SearchHit>& hits) {
  ordered_json results = ordered_json::array();
  for (const auto& h : hits) results.push_back({{"id", h.node_id}, {"name", h.display_name}, {"kind", to_string(h.kind)}});
  return {{"query", query}, {"results", std::move(results)}};
}

ordered_json node_payload(const AppState& state, const std::string& id) {
  const auto& snap = *state.snapshot;
  ordered_json j;
  j["id"] = id;
  if (auto a = snap.authors.find(id); a != snap.authors.end()) {
    const auto& r = a->second;
    j["name"] = r.display_name;
    j["kind"] = to_string(NodeKind::talent);
    j["institution"] = r.institution;
    auto pc = snap.publication_count.find(id);
    j["publication_count"] = pc == snap.publication_count.end() ? 0 : pc->second;
    j["career_start_year"] = r.career_start_year ? ordered_json(*r.career_start_year) : ordered_json(nullptr);
    j["detail_url"] = r.detail_url ? ordered_json(*r.detail_url) : ordered_json(nullptr);
  } else if (auto d = snap.datasets.find(id); d != snap.datasets.end()) {
    j["name"] = d->second.name;
    j["kind"] = to_string(NodeKind::dataset);
    j["description"] = d->second.description;
    auto users = snap.dataset_user_index.find(id);
    j["user_count"] = users == snap.dataset_user_index.end() ? 0 : users->second.size();
  } else {
    throw UnknownIdError(id);
  }
  if (auto it = state.layout_index.find(id); it != state.layout_index.end()) {
    const auto& p = state.layout[it->second];
    j["x"] = p.x;
    j["y"] = p.y;
    j["display_size"] = p.display_size;
  } else {
    j["x"] = nullptr;
    j["y"] = nullptr;
    j["display_size"] = nullptr;
  }
  return j;
}

ordered_json recommendations_payload(const AppState& state, const std::string& id, std::size_t limit,
                                     std::size_t offset) {
  const auto& snap = *state.snapshot;
  const RecommendationList* list = nullptr;
  RecommendationKind kind;
  if (snap.authors.count(id)) {
    kind = RecommendationKind::collaborator;
    if (auto it = state.recommendations.collaborator_recs.find(id); it != state.recommendations.collaborator_recs.end())
      list = &it->second;
  } else if (snap.datasets.count(id)) {
    kind = RecommendationKind::dataset_user;
    if (auto it = state.recommendations.dataset_user_recs.find(id); it != state.recommendations.dataset_user_recs.end())
      list = &it->second;
  } else {
    throw UnknownIdError(id);
  }
  ordered_json items = ordered_json::array();
  const std::size_t total = list ? list->size() : 0;
  for (std::size_t i = offset; i < total && items.size() < limit; ++i) {
    const auto& e = (*list)[i];
    auto a = snap.authors.find(e.target_id);
    items.push_back({{"target", e.target_id},
                     {"name", a == snap.authors.end() ? std::string() : a->second.display_name},
                     {"score", e.score},
                     {"rank", e.rank}});
  }
  return {{"source", id}, {"kind", to_string(kind)}, {"total", total}, {"offset", offset}, {"items", std::move(items)}};
}

ordered_json collaborators_payload(const std::string& id, const std::vector<std::string>& ids) {
  return {{"id", id}, {"collaborators", ids}};
}

ordered_json justification_payload(const FetchResult& result) {
  const auto& r = result.record;
  const char* cache = result.status == CacheStatus::hit ? "hit" : result.status == CacheStatus::miss ? "miss" : "coalesced";
  return {{"kind", to_string(r.key.kind)}, {"source", r.key.source_id}, {"target", r.key.target_id},
          {"text", r.text},                {"model", r.model_id},       {"created_at", r.created_at},
          {"cache", cache}};
}

namespace {

struct BadRequest : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

std::size_t parse_count(const std::string& name, const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || *end != '\0' || errno == ERANGE)
    throw BadRequest("parameter \"" + name + "\" must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& name, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(v)) throw BadRequest("parameter \"" + name + "\" must be a finite number");
  return v;
}

double required_real(const httplib::Request& req, const char* name) {
  auto v = param(req, name);
  if (!v) throw BadRequest(std::string("missing parameter \"") + name + "\"");
  return parse_real(name, *v);
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(dump_api_json(body), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

struct ApiServer::Impl {
  ServerConfig config;
  std::shared_ptr<JustificationGateway> gateway;
  StatePtr state;  // accessed with atomic_load / atomic_store
  httplib::Server http;
  std::thread worker;
  std::atomic<bool> running{false};

  StatePtr current() const { return std::atomic_load(&state); }

  // Runs a handler, mapping library errors onto status codes.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        auto s = current();
        if (!s) return send_error(res, 503, "not ready");
        f(*s, req, res);
      } catch (const BadRequest& e) {
        send_error(res, 400, e.what());
      } catch (const UnknownIdError& e) {
        send_error(res, 404, e.what());
      } catch (const GatewayBusy& e) {
        send_error(res, 429, e.what());
      } catch (const ProviderError& e) {
        send_json(res, 502, {{"error", e.what()}, {"retriable", e.retriable()}, {"attempts", e.attempts()}});
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    http.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      auto s = current();
      if (!s) return send_json(res, 503, {{"status", "loading"}});
      send_json(res, 200, {{"status", "ok"}, {"nodes", s->layout.size()}});
    });

    http.Get("/api/search", guarded([](const AppState& s, const httplib::Request& req, httplib::Response& res) {
      const std::string q = param(req, "q").value_or("");
      std::optional<NodeKind> kind;
      if (auto k = param(req, "kind"); k && !k->empty()) {
        try {
          kind = node_kind_from_string(*k);
        } catch (const std::invalid_argument& e) {
          throw BadRequest(e.what());
        }
      }
      const std::size_t limit = param(req, "limit") ? parse_count("limit", *param(req, "limit")) : 10;
      const std::size_t offset = param(req, "offset") ? parse_count("offset", *param(req, "offset")) : 0;
      if (limit == 0) throw BadRequest("parameter \"limit\" must be at least 1");
      send_json(res, 200, search_payload(q, s.names.search(q, kind, limit, offset)));
    }));

    http.Get("/api/viewport", guarded([this](const AppState& s, const httplib::Request& req, httplib::Response& res) {
      BoundingBox box{required_real(req, "x0"), required_real(req, "y0"), required_real(req, "x1"),
                      required_real(req, "y1")};
      if (!(box.x0 < box.x1) || !(box.y0 < box.y1)) throw BadRequest("viewport must satisfy x0 < x1 and y0 < y1");
      std::size_t limit = config.viewport_max_results;
      if (auto l = param(req, "limit")) limit = std::min(limit, parse_count("limit", *l));
      if (limit == 0) throw BadRequest("parameter \"limit\" must be at least 1");
      send_json(res, 200, viewport_payload(query_viewport(s.tree, box, limit)));
    }));

    http.Get(R"(/api/nodes/([^/]+))", guarded([](const AppState& s, const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, node_payload(s, req.matches[1].str()));
    }));

    http.Get(R"(/api/nodes/([^/]+)/recommendations)",
             guarded([](const AppState& s, const httplib::Request& req, httplib::Response& res) {
               const std::size_t limit = param(req, "limit") ? parse_count("limit", *param(req, "limit")) : 30;
               const std::size_t offset = param(req, "offset") ? parse_count("offset", *param(req, "offset")) : 0;
               if (limit == 0) throw BadRequest("parameter \"limit\" must be at least 1");
               send_json(res, 200, recommendations_payload(s, req.matches[1].str(), limit, offset));
             }));

    http.Get(R"(/api/nodes/([^/]+)/collaborators)",
             guarded([](const AppState& s, const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1].str();
               send_json(res, 200, collaborators_payload(id, collaborator_highlight(id, *s.snapshot, s.layout_ids)));
             }));

    http.Post("/api/justifications", guarded([this](const AppState& s, const httplib::Request& req,
                                                    httplib::Response& res) {
      nlohmann::json body;
      JustificationKey key;
      try {
        body = nlohmann::json::parse(req.body);
        key.kind = recommendation_kind_from_string(body.at("kind").get<std::string>());
        key.source_id = body.at("source").get<std::string>();
        key.target_id = body.at("target").get<std::string>();
      } catch (const std::exception& e) {
        throw BadRequest(std::string("body must be {\"kind\",\"source\",\"target\"}: ") + e.what());
      }
      if (!gateway) throw Error("justifications are not configured");
      const auto result = justify(key, *s.snapshot, *gateway);
      auto payload = justification_payload(result);
      res.set_header("X-Cache", payload["cache"].get<std::string>());
      send_json(res, 200, payload);
    }));

    http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    http.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      const auto origin = req.get_header_value("Origin");
      if (origin.empty()) return;
      for (const auto& allowed : config.cors_allowlist) {
        if (allowed == "*" || allowed == origin) {
          res.set_header("Access-Control-Allow-Origin", allowed == "*" ? "*" : origin);
          res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
          res.set_header("Access-Control-Allow-Headers", "Content-Type");
          res.set_header("Access-Control-Expose-Headers", "X-Cache");
          res.set_header("Vary", "Origin");
          return;
        }
      }
    });

    if (!config.ui_dir.empty()) {
      if (!http.set_mount_point("/", config.ui_dir.string()))
        throw Error(config.ui_dir.string() + ": UI directory does not exist");
    }
  }
};

ApiServer::ApiServer(ServerConfig config, StatePtr state, std::shared_ptr<JustificationGateway> gateway)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->gateway = std::move(gateway);
  impl_->state = std::move(state);
  impl_->routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start() {
  const int port = impl_->config.port == 0 ? impl_->http.bind_to_any_port(impl_->config.host)
                                           : (impl_->http.bind_to_port(impl_->config.host, impl_->config.port)
                                                  ? impl_->config.port
                                                  : -1);
  if (port < 0) throw Error("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  impl_->running = true;
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port;
}

void ApiServer::run() {
  impl_->running = true;
  if (!impl_->http.listen(impl_->config.host, impl_->config.port))
    throw Error("cannot listen on " + impl_->config.host + ":" + std::to_string(impl_->config.port));
}

void ApiServer::stop() {
  if (!impl_) return;
  if (impl_->running.exchange(false)) impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

void ApiServer::swap_state(StatePtr next) { std::atomic_store(&impl_->state, std::move(next)); }

StatePtr ApiServer::state() const { return impl_->current(); }

}  // namespace semspace
