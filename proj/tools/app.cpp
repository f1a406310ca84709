// Pipeline driver: app ingest|embed|recommend|layout|serve [flags]

#include <cstdio>
#include <exception>
#include <optional>

#include "CLI11.hpp"
#include "semspace/config.hpp"
#include "semspace/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Semantic space pipeline and API server"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, input_dir, output_dir, method;
  std::optional<std::uint64_t> seed;
  std::optional<double> perplexity;
  std::optional<int> iterations, port;
  bool mock_llm = false;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--input-dir", input_dir, "Directory with papers/authors/datasets.jsonl and paper_embeddings.emb1");
  app.add_option("--output-dir", output_dir, "Directory for generated artifacts (also the server data directory)");
  app.add_option("--seed", seed, "Layout random seed");
  app.add_option("--method", method, "Layout method")->check(CLI::IsMember({"tsne", "umap"}));
  app.add_option("--perplexity", perplexity, "t-SNE perplexity");
  app.add_option("--iterations", iterations, "t-SNE iterations / UMAP epochs");
  app.add_flag("--mock-llm", mock_llm, "Use the offline justification provider");
  app.add_option("--port", port, "Server port")->check(CLI::Range(1, 65535));

  auto* ingest = app.add_subcommand("ingest", "Parse record files into snapshot.json");
  auto* embed = app.add_subcommand("embed", "Aggregate author and dataset vectors");
  auto* recommend = app.add_subcommand("recommend", "Build collaborator and dataset-user recommendations");
  auto* layout = app.add_subcommand("layout", "Compute the 2D layout");
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");

  CLI11_PARSE(app, argc, argv);

  try {
    semspace::AppConfig cfg = config_path.empty() ? semspace::AppConfig{} : semspace::load_config(config_path);
    if (!input_dir.empty()) cfg.input_dir = input_dir;
    if (!output_dir.empty()) {
      cfg.output_dir = output_dir;
      cfg.server.data_dir = output_dir;
    }
    if (seed) cfg.layout.random_seed = *seed;
    if (!method.empty()) cfg.layout.method = semspace::layout_method_from_string(method);
    if (perplexity) cfg.layout.tsne.perplexity = *perplexity;
    if (iterations) {
      cfg.layout.tsne.iterations = *iterations;
      cfg.layout.umap.epochs = *iterations;
    }
    if (port) cfg.server.port = *port;
    if (mock_llm) cfg.server.provider.mock = true;

    if (ingest->parsed()) {
      const auto s = semspace::run_ingest(cfg);
      std::printf("ingest: %zu papers, %zu authors, %zu datasets\n", s.papers, s.authors, s.datasets);
    } else if (embed->parsed()) {
      const auto s = semspace::run_embed(cfg);
      std::printf("embed: %zu author vectors (%zu without evidence), %zu dataset vectors (%zu without evidence)\n",
                  s.authors, s.authors_without_evidence, s.datasets, s.datasets_without_evidence);
    } else if (recommend->parsed()) {
      const auto s = semspace::run_recommend(cfg);
      std::printf("recommend: %zu collaborator lists, %zu dataset-user lists\n", s.collaborator_lists,
                  s.dataset_user_lists);
    } else if (layout->parsed()) {
      const auto r = semspace::run_layout_stage(cfg);
      std::printf("layout: %zu nodes, method %s, objective %.6f, trustworthiness %.4f\n", r.ids.size(),
                  semspace::to_string(r.method), r.final_objective, r.trustworthiness);
    } else if (serve->parsed()) {
      semspace::run_serve(cfg);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
