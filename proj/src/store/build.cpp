#include "mirror/store/build.hpp"

#include <unistd.h>

#include <algorithm>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mirror/core/text.hpp"
#include "mirror/ingest/events_io.hpp"
#include "mirror/store/binary_io.hpp"

namespace mirror::store {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BuildStage stage) {
  switch (stage) {
    case BuildStage::Queued: return "queued";
    case BuildStage::Ingesting: return "ingesting";
    case BuildStage::Embedding: return "embedding";
    case BuildStage::Reducing: return "reducing";
    case BuildStage::Labeling: return "labeling";
    case BuildStage::Done: return "done";
    case BuildStage::Failed: return "failed";
  }
  return "unknown";
}

std::string_view stage_tag(BuildStage stage) {
  switch (stage) {
    case BuildStage::Ingesting: return "ingest";
    case BuildStage::Embedding: return "embedding";
    case BuildStage::Reducing: return "reducing";
    case BuildStage::Labeling: return "labeling";
    default: return to_string(stage);
  }
}

namespace {

template <typename Fn>
auto in_stage(BuildStage stage, const ProgressFn& progress, Fn&& fn) {
  if (progress) progress(stage);
  try {
    return fn();
  } catch (Error& e) {
    if (!e.stage()) e.with_stage(std::string(stage_tag(stage)));
    throw;
  }
}

bool looks_like_jsonl(std::string_view raw) {
  const auto pos = raw.find_first_not_of(" \t\r\n");
  return pos != std::string_view::npos && raw[pos] == '{';
}

std::vector<ingest::FootprintEvent> parse_input(const RawInput& input, const IngestOptions& options) {
  switch (ingest::detect_format(input.content)) {
    case ingest::ExportFormat::TakeoutJson: return ingest::parse_takeout_watch_history(input.content);
    case ingest::ExportFormat::SpotifyJson: return ingest::parse_spotify_history(input.content, options.spotify);
    case ingest::ExportFormat::TakeoutHtml:
      throw Error(ErrorCode::UnsupportedFormat,
                  input.name + ": HTML watch history is not supported; export as JSON from Takeout");
    case ingest::ExportFormat::Unknown: break;
  }
  if (looks_like_jsonl(input.content)) {
    std::istringstream in(input.content);
    return ingest::read_events_jsonl(in);
  }
  throw Error(ErrorCode::MalformedExport, input.name + ": not a recognised export", -1);
}

std::string cache_file_name(std::string_view provider_id) {
  std::string name;
  for (char c : provider_id) name.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  return name + ".bin";
}

json config_fingerprint(const BuildConfig& config, const Providers& providers) {
  return {{"name", config.name},
          {"skip_threshold_ms", config.ingest.spotify.skip_threshold_ms},
          {"local_offset_min", config.ingest.spotify.local_offset.count()},
          {"after_search_window_min", config.ingest.after_search_window.count()},
          {"transcripts", config.transcripts ? sha256_hex(*config.transcripts) : ""},
          {"embedding", providers.embedding ? providers.embedding->id() : ""},
          {"reducer", to_json(config.reducer)},
          {"tree", {config.tree.levels, config.tree.l0_max, config.tree.fanout}},
          {"density_resolution", config.density_resolution},
          {"versions", current_versions()}};
}

}  // namespace

std::vector<ingest::FootprintEvent> ingest_inputs(std::span<const RawInput> inputs, const IngestOptions& options,
                                                  const std::optional<std::string>& transcripts) {
  try {
    if (inputs.empty()) throw Error(ErrorCode::MalformedExport, "no export given");
    std::vector<ingest::FootprintEvent> events;
    for (const auto& input : inputs) {
      auto part = parse_input(input, options);
      if (part.empty()) throw Error(ErrorCode::MalformedExport, input.name + ": export contains no events");
      events.insert(events.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    events = ingest::classify_after_search(std::move(events), options.after_search_window);
    if (transcripts) ingest::apply_transcripts(events, ingest::parse_transcripts(*transcripts));
    ingest::finalize_events(events);
    return events;
  } catch (Error& e) {
    if (!e.stage()) e.with_stage("ingest");
    throw;
  }
}

std::string dataset_id_for(std::span<const RawInput> inputs, const BuildConfig& config, const Providers& providers) {
  std::string material;
  for (const auto& input : inputs) material += sha256_hex(input.content) + "\n";
  material += config_fingerprint(config, providers).dump();
  return sha256_hex(material).substr(0, 16);
}

MapDataset assemble_dataset(std::vector<ingest::FootprintEvent> events, const BuildConfig& config,
                            Providers& providers, embed::EmbeddingCache* cache, const ProgressFn& progress) {
  if (!providers.embedding || !providers.make_topics)
    throw Error(ErrorCode::InvalidArgument, "build needs an embedding and a topic provider");
  if (events.empty()) throw Error(ErrorCode::MalformedExport, "no events to build").with_stage("ingest");

  MapDataset ds;
  ds.events = std::move(events);
  std::vector<std::string> payloads, ids;
  payloads.reserve(ds.events.size());
  ids.reserve(ds.events.size());
  for (const auto& e : ds.events) {
    payloads.push_back(e.text_payload);
    ids.push_back(e.event_id);
  }

  const auto embedded = in_stage(BuildStage::Embedding, progress, [&] {
    return embed::embed_texts(payloads, *providers.embedding, cache, config.embed);
  });
  ds.vectors = embedded.vectors;

  ds.model = in_stage(BuildStage::Reducing, progress,
                      [&] { return reduce::fit(ds.vectors, config.reducer, embedded.provider_id); });
  ds.index();

  std::string topic_provider_id;
  in_stage(BuildStage::Labeling, progress, [&] {
    auto provider = providers.make_topics();
    topic_provider_id = provider->id();
    ds.assignments = topics::extract_topics(ids, payloads, *provider, config.topic_parallelism);
    auto ranked = topics::aggregate_rank(ds.assignments);
    topics::anchor_topics(ranked, ds.row_of, ds.positions());
    ds.tree = topics::build_topic_tree(ranked, config.tree, ids, ds.row_of, ds.positions());
    map::DensityOptions density;
    density.resolution = config.density_resolution;
    ds.density = map::kde_density(ds.positions(), density);
    return 0;
  });

  auto& m = ds.manifest;
  m.name = config.name;
  for (auto platform : {ingest::Platform::YouTube, ingest::Platform::Spotify}) {
    if (std::any_of(ds.events.begin(), ds.events.end(), [&](const auto& e) { return e.platform == platform; }))
      m.platforms.emplace_back(ingest::to_string(platform));
  }
  m.event_count = ds.events.size();
  m.time_min = ds.events.front().timestamp;
  m.time_max = ds.events.back().timestamp;
  m.embedding_provider_id = embedded.provider_id;
  m.embedding_dim = embedded.dim;
  m.reducer = config.reducer;
  m.curve = ds.model.curve;
  m.topic_provider_id = topic_provider_id;
  m.tree = config.tree;
  m.density_bandwidth = ds.density.bandwidth;
  m.density_resolution = ds.density.resolution;
  m.density_extent = ds.density.extent;
  m.built_at = std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
  m.versions = current_versions();
  return ds;
}

BuildResult build_dataset(DatasetStore& store, std::span<const RawInput> inputs, const BuildConfig& config,
                          Providers& providers, const ProgressFn& progress) {
  if (progress) progress(BuildStage::Ingesting);
  auto events = ingest_inputs(inputs, config.ingest, config.transcripts);

  BuildResult result;
  result.dataset_id = dataset_id_for(inputs, config, providers);
  const fs::path final_dir = store.dataset_dir(result.dataset_id);
  FileLock lock(store.root() / "datasets" / (result.dataset_id + ".lock"));

  if (store.contains(result.dataset_id)) {
    spdlog::info("dataset {}: reused cache", result.dataset_id);
    result.reused = true;
    result.dataset = store.get(result.dataset_id);
    if (progress) progress(BuildStage::Done);
    return result;
  }

  embed::EmbeddingCache cache(store.cache_dir() / cache_file_name(providers.embedding ? providers.embedding->id() : ""));
  MapDataset ds = assemble_dataset(std::move(events), config, providers, &cache, progress);
  ds.manifest.dataset_id = result.dataset_id;
  for (const auto& input : inputs) ds.manifest.inputs.push_back({input.name, sha256_hex(input.content)});
  spdlog::info("dataset {}: embedding cache {} hits, {} misses", result.dataset_id, cache.hits(), cache.misses());

  const fs::path staging = store.root() / "datasets" / ("." + result.dataset_id + ".staging-" + std::to_string(::getpid()));
  std::error_code ec;
  fs::remove_all(staging, ec);
  try {
    write_dataset(staging, ds);
    fs::remove_all(final_dir, ec);
    fs::rename(staging, final_dir);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    throw Error(ErrorCode::IoError, e.what()).with_stage("store");
  } catch (Error& e) {
    fs::remove_all(staging, ec);
    if (!e.stage()) e.with_stage("store");
    throw;
  }
  store.invalidate(result.dataset_id);
  result.dataset = std::make_shared<const MapDataset>(std::move(ds));
  if (progress) progress(BuildStage::Done);
  return result;
}

}  // namespace mirror::store
