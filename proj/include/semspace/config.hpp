#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "semspace/justify.hpp"
#include "semspace/layout.hpp"
#include "semspace/recommender.hpp"

namespace semspace {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "out";
  std::filesystem::path ui_dir;  // static assets, optional
  std::size_t viewport_max_results = 5000;
  std::vector<std::string> cors_allowlist;  // "*" allows any origin
  ProviderConfig provider;
};

struct AppConfig {
  std::filesystem::path input_dir = ".";
  std::filesystem::path output_dir = "out";
  int activity_cutoff_year = kDefaultActivityCutoffYear;
  std::size_t k_collaborators = kCollaboratorCount;
  std::size_t k_dataset_users = kDatasetUserCount;
  LayoutConfig layout;
  ServerConfig server;
};

/// Parses a JSON configuration document. Every key is optional; unknown keys
/// are rejected so that typos do not silently fall back to defaults. The
/// provider credential is never read from the file (see CM_LLM_API_KEY).
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

/// Throws std::invalid_argument naming the offending field.
void validate_server_config(const ServerConfig& config);

}  // namespace semspace
