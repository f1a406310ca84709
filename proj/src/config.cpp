#include "semspace/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace semspace {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument("config: \"" + where + "\" must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument("config: unknown key \"" + where + "." + key + "\"");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: \"" + where + "." + key + "\" has the wrong type");
  }
}

void read_path(const json& j, const char* key, std::filesystem::path& out, const std::string& where) {
  std::string s = out.string();
  read(j, key, s, where);
  out = s;
}

void read_ms(const json& j, const char* key, std::chrono::milliseconds& out, const std::string& where) {
  long long ms = out.count();
  read(j, key, ms, where);
  if (ms < 0) throw std::invalid_argument("config: \"" + where + "." + key + "\" must be non-negative");
  out = std::chrono::milliseconds(ms);
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  check_keys(root, "config",
             {"input_dir", "output_dir", "activity_cutoff_year", "recommend", "layout", "server", "provider"});
  AppConfig c;
  read_path(root, "input_dir", c.input_dir, "config");
  read_path(root, "output_dir", c.output_dir, "config");
  read(root, "activity_cutoff_year", c.activity_cutoff_year, "config");

  if (auto it = root.find("recommend"); it != root.end()) {
    check_keys(*it, "recommend", {"collaborators", "dataset_users"});
    read(*it, "collaborators", c.k_collaborators, "recommend");
    read(*it, "dataset_users", c.k_dataset_users, "recommend");
  }

  if (auto it = root.find("layout"); it != root.end()) {
    const json& l = *it;
    check_keys(l, "layout", {"method", "seed", "tsne", "umap", "trustworthiness_k", "trustworthiness_sample"});
    std::string method = to_string(c.layout.method);
    read(l, "method", method, "layout");
    c.layout.method = layout_method_from_string(method);
    read(l, "seed", c.layout.random_seed, "layout");
    read(l, "trustworthiness_k", c.layout.trustworthiness_k, "layout");
    read(l, "trustworthiness_sample", c.layout.trustworthiness_sample, "layout");
    if (auto t = l.find("tsne"); t != l.end()) {
      check_keys(*t, "layout.tsne",
                 {"perplexity", "iterations", "learning_rate", "initial_momentum", "final_momentum",
                  "momentum_switch_iteration", "early_exaggeration", "exaggeration_iterations", "theta"});
      auto& ts = c.layout.tsne;
      read(*t, "perplexity", ts.perplexity, "layout.tsne");
      read(*t, "iterations", ts.iterations, "layout.tsne");
      read(*t, "learning_rate", ts.learning_rate, "layout.tsne");
      read(*t, "initial_momentum", ts.initial_momentum, "layout.tsne");
      read(*t, "final_momentum", ts.final_momentum, "layout.tsne");
      read(*t, "momentum_switch_iteration", ts.momentum_switch_iteration, "layout.tsne");
      read(*t, "early_exaggeration", ts.early_exaggeration, "layout.tsne");
      read(*t, "exaggeration_iterations", ts.exaggeration_iterations, "layout.tsne");
      read(*t, "theta", ts.theta, "layout.tsne");
    }
    if (auto u = l.find("umap"); u != l.end()) {
      check_keys(*u, "layout.umap",
                 {"n_neighbors", "min_dist", "spread", "epochs", "negative_sample_rate", "learning_rate"});
      auto& um = c.layout.umap;
      read(*u, "n_neighbors", um.n_neighbors, "layout.umap");
      read(*u, "min_dist", um.min_dist, "layout.umap");
      read(*u, "spread", um.spread, "layout.umap");
      read(*u, "epochs", um.epochs, "layout.umap");
      read(*u, "negative_sample_rate", um.negative_sample_rate, "layout.umap");
      read(*u, "learning_rate", um.learning_rate, "layout.umap");
    }
  }

  c.server.data_dir = c.output_dir;
  if (auto it = root.find("server"); it != root.end()) {
    check_keys(*it, "server", {"host", "port", "data_dir", "ui_dir", "viewport_max_results", "cors_allowlist"});
    read(*it, "host", c.server.host, "server");
    read(*it, "port", c.server.port, "server");
    read_path(*it, "data_dir", c.server.data_dir, "server");
    read_path(*it, "ui_dir", c.server.ui_dir, "server");
    read(*it, "viewport_max_results", c.server.viewport_max_results, "server");
    read(*it, "cors_allowlist", c.server.cors_allowlist, "server");
  }

  if (auto it = root.find("provider"); it != root.end()) {
    check_keys(*it, "provider",
               {"endpoint", "model", "timeout_ms", "max_attempts", "backoff_ms", "jitter", "response_path",
                "max_concurrent", "queue_capacity", "mock"});
    auto& p = c.server.provider;
    read(*it, "endpoint", p.endpoint, "provider");
    read(*it, "model", p.model, "provider");
    read_ms(*it, "timeout_ms", p.timeout, "provider");
    read(*it, "max_attempts", p.max_attempts, "provider");
    read_ms(*it, "backoff_ms", p.backoff_base, "provider");
    read(*it, "jitter", p.jitter, "provider");
    read(*it, "response_path", p.response_path, "provider");
    read(*it, "max_concurrent", p.max_concurrent, "provider");
    read(*it, "queue_capacity", p.queue_capacity, "provider");
    read(*it, "mock", p.mock, "provider");
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void validate_server_config(const ServerConfig& config) {
  if (config.port < 1 || config.port > 65535)
    throw std::invalid_argument("server.port must be in [1, 65535], got " + std::to_string(config.port));
  if (config.viewport_max_results == 0) throw std::invalid_argument("server.viewport_max_results must be positive");
  std::error_code ec;
  if (!std::filesystem::is_directory(config.data_dir, ec))
    throw std::invalid_argument("data directory \"" + config.data_dir.string() + "\" does not exist");
  if (config.provider.max_attempts < 1) throw std::invalid_argument("provider.max_attempts must be at least 1");
  if (config.provider.jitter < 0.0) throw std::invalid_argument("provider.jitter must be non-negative");
}

}  // namespace semspace
