#pragma once

#include <cstddef>
#include <string>

#include "semspace/config.hpp"
#include "semspace/layout.hpp"

namespace semspace {

// Each stage reads the artifacts of the previous ones from the output
// directory (raw record files and paper vectors come from the input
// directory) and writes its own artifact there.

struct IngestSummary {
  std::size_t papers = 0, authors = 0, datasets = 0;
};
/// papers.jsonl, authors.jsonl, datasets.jsonl -> snapshot.json
IngestSummary run_ingest(const AppConfig& config);

struct EmbedSummary {
  std::size_t authors = 0, datasets = 0;
  std::size_t authors_without_evidence = 0, datasets_without_evidence = 0;
};
/// snapshot.json + paper_embeddings.emb1 -> author_embeddings.emb1, dataset_embeddings.emb1
EmbedSummary run_embed(const AppConfig& config);

struct RecommendSummary {
  std::size_t collaborator_lists = 0, dataset_user_lists = 0;
};
/// -> recommendations.jsonl
RecommendSummary run_recommend(const AppConfig& config);

/// Author and dataset vectors in one table (authors first, each block sorted by id).
EmbeddingTable layout_input(const EmbeddingStore& store);

/// -> layout.lay1 (coordinates centred and scaled into [-1000, 1000]) and
/// layout_report.json.
LayoutResult run_layout_stage(const AppConfig& config);

/// Loads the data directory and serves until interrupted.
void run_serve(const AppConfig& config);

}  // namespace semspace
