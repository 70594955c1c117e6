#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mirror/embed/embed_texts.hpp"
#include "mirror/ingest/parsers.hpp"
#include "mirror/store/dataset.hpp"

namespace mirror::store {

/// One uploaded file: a Takeout or Spotify export, or an events JSONL
/// written by `mirror ingest`.
struct RawInput {
  std::string name;
  std::string content;
};

enum class BuildStage { Queued, Ingesting, Embedding, Reducing, Labeling, Done, Failed };

std::string_view to_string(BuildStage stage);
/// The stage name used in error attribution: ingest, embedding, reducing,
/// labeling.
std::string_view stage_tag(BuildStage stage);

struct IngestOptions {
  ingest::SpotifyOptions spotify;
  std::chrono::minutes after_search_window = ingest::kDefaultAfterSearchWindow;
};

struct BuildConfig {
  std::string name = "dataset";
  IngestOptions ingest;
  std::optional<std::string> transcripts;  // sidecar JSON content
  embed::EmbedOptions embed;
  reduce::ReducerParams reducer;
  topics::TreeParams tree;
  std::size_t topic_parallelism = 1;
  int density_resolution = map::kDefaultResolution;
};

struct Providers {
  embed::EmbeddingProvider* embedding = nullptr;
  /// Called once per build; topic providers may keep per-corpus state.
  std::function<std::unique_ptr<topics::TopicProvider>()> make_topics;
};

using ProgressFn = std::function<void(BuildStage)>;

/// Parses, merges and finalizes every input. Throws with stage "ingest";
/// an input without events is an Error{MalformedExport}.
std::vector<ingest::FootprintEvent> ingest_inputs(std::span<const RawInput> inputs, const IngestOptions& options,
                                                  const std::optional<std::string>& transcripts = std::nullopt);

/// Content address: sha256 over every input and the build-relevant
/// configuration, first 16 hex digits.
std::string dataset_id_for(std::span<const RawInput> inputs, const BuildConfig& config, const Providers& providers);

/// Runs embedding, reduction, topics and density over ingested events
/// without touching disk.
MapDataset assemble_dataset(std::vector<ingest::FootprintEvent> events, const BuildConfig& config,
                            Providers& providers, embed::EmbeddingCache* cache = nullptr,
                            const ProgressFn& progress = {});

struct BuildResult {
  std::string dataset_id;
  bool reused = false;
  std::shared_ptr<const MapDataset> dataset;
};

/// Full pipeline into `store`. An existing dataset with the same id is
/// returned as is (reused = true). Artifacts are written to a staging
/// directory and renamed into place, so a failed build leaves nothing.
/// Errors carry the failing stage.
BuildResult build_dataset(DatasetStore& store, std::span<const RawInput> inputs, const BuildConfig& config,
                          Providers& providers, const ProgressFn& progress = {});

}  // namespace mirror::store
