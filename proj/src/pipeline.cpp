#include "semspace/pipeline.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "semspace/error.hpp"
#include "semspace/server.hpp"
#include "semspace/spatial.hpp"

namespace semspace {

namespace {

std::filesystem::path existing(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(path.string() + ": file not found");
  return path;
}

void ensure_output_dir(const AppConfig& config) { std::filesystem::create_directories(config.output_dir); }

EmbeddingStore read_aggregates(const AppConfig& config) {
  EmbeddingStore store;
  store.authors = read_emb1(existing(config.output_dir / kAuthorEmbeddingsFile));
  store.datasets = read_emb1(existing(config.output_dir / kDatasetEmbeddingsFile));
  return store;
}

}  // namespace

IngestSummary run_ingest(const AppConfig& config) {
  ensure_output_dir(config);
  const auto snapshot = load_corpus(existing(config.input_dir / "papers.jsonl"),
                                    existing(config.input_dir / "authors.jsonl"),
                                    existing(config.input_dir / "datasets.jsonl"), config.activity_cutoff_year);
  write_snapshot(snapshot, config.output_dir / kSnapshotFile);
  return {snapshot.papers.size(), snapshot.authors.size(), snapshot.datasets.size()};
}

EmbedSummary run_embed(const AppConfig& config) {
  ensure_output_dir(config);
  const auto snapshot = read_snapshot(existing(config.output_dir / kSnapshotFile));
  auto papers = read_emb1(existing(config.input_dir / kPaperEmbeddingsFile));
  const auto store = build_embedding_store(snapshot, std::move(papers));
  write_emb1(store.authors, config.output_dir / kAuthorEmbeddingsFile);
  write_emb1(store.datasets, config.output_dir / kDatasetEmbeddingsFile);
  return {store.authors.size(), store.datasets.size(), store.authors_without_evidence, store.datasets_without_evidence};
}

RecommendSummary run_recommend(const AppConfig& config) {
  const auto snapshot = read_snapshot(existing(config.output_dir / kSnapshotFile));
  const auto store = read_aggregates(config);
  const auto table = build_recommendation_table(snapshot, store, config.k_collaborators, config.k_dataset_users);
  write_recommendations(table, config.output_dir / kRecommendationsFile);
  return {table.collaborator_recs.size(), table.dataset_user_recs.size()};
}

EmbeddingTable layout_input(const EmbeddingStore& store) {
  const std::size_t dim = store.authors.empty() ? store.datasets.dimension() : store.authors.dimension();
  if (!store.authors.empty() && !store.datasets.empty() && store.datasets.dimension() != dim)
    throw Error("author and dataset vectors have different dimensions");
  EmbeddingTable all(dim);
  all.reserve(store.authors.size() + store.datasets.size());
  for (std::size_t i = 0; i < store.authors.size(); ++i) all.add(store.authors.id(i), store.authors.row(i));
  for (std::size_t i = 0; i < store.datasets.size(); ++i) {
    if (store.authors.find(store.datasets.id(i)))
      throw Error("id \"" + store.datasets.id(i) + "\" names both an author and a dataset");
    all.add(store.datasets.id(i), store.datasets.row(i));
  }
  return all;
}

LayoutResult run_layout_stage(const AppConfig& config) {
  const auto snapshot = read_snapshot(existing(config.output_dir / kSnapshotFile));
  const auto store = read_aggregates(config);
  const auto vectors = layout_input(store);
  auto result = run_layout(vectors, config.layout);
  normalize_layout(result.coords);

  std::vector<LayoutPoint> points;
  points.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    LayoutPoint p;
    p.node_id = vectors.id(i);
    p.x = result.coords[2 * i];
    p.y = result.coords[2 * i + 1];
    if (i < store.authors.size()) {
      auto pc = snapshot.publication_count.find(p.node_id);
      p.kind = NodeKind::talent;
      p.display_size = node_display_size(
          pc == snapshot.publication_count.end() ? 0 : static_cast<long long>(pc->second), NodeKind::talent);
    } else {
      p.kind = NodeKind::dataset;
      p.display_size = node_display_size(0, NodeKind::dataset);
    }
    p.importance = p.display_size;
    points.push_back(std::move(p));
  }
  write_lay1(points, config.output_dir / kLayoutFile);

  nlohmann::ordered_json report;
  report["method"] = to_string(result.method);
  report["seed"] = config.layout.random_seed;
  report["nodes"] = points.size();
  report["final_objective"] = result.final_objective;
  report["trustworthiness"] = result.trustworthiness;
  report["unconverged_points"] = result.unconverged_points;
  report["objective_history"] = nlohmann::ordered_json::array();
  for (const auto& [it, v] : result.objective_history) report["objective_history"].push_back({it, v});
  std::ofstream out(config.output_dir / "layout_report.json");
  out << report.dump(2) << "\n";
  if (!out) throw Error((config.output_dir / "layout_report.json").string() + ": write failed");
  return result;
}

void run_serve(const AppConfig& config) {
  ServerConfig sc = config.server;
  sc.provider.apply_environment();
  validate_server_config(sc);

  // Block the termination signals before any thread starts so that only
  // sigwait below receives them. Shells start background jobs with SIGINT
  // ignored, and ignored signals never reach sigwait.
  std::signal(SIGINT, SIG_DFL);
  std::signal(SIGTERM, SIG_DFL);
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto state = load_app_state(sc.data_dir);
  auto gateway = std::make_shared<JustificationGateway>(sc.provider, make_provider(sc.provider),
                                                        sc.data_dir / kJustificationsFile);
  ApiServer server(sc, state, gateway);
  const int port = server.start();
  std::fprintf(stderr, "serving %zu nodes on http://%s:%d (provider: %s)\n", state->layout.size(), sc.host.c_str(),
               port, sc.provider.mock ? "mock" : sc.provider.endpoint.c_str());
  int sig = 0;
  sigwait(&signals, &sig);
  std::fprintf(stderr, "shutting down\n");
  server.stop();
}

}  // namespace semspace
