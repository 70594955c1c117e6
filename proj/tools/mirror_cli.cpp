// mirror: build and serve semantic maps of exported watch and listening
// histories.
#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

#include "mirror/cli/config.hpp"
#include "mirror/ingest/events_io.hpp"
#include "mirror/server/server.hpp"
#include "mirror/store/binary_io.hpp"
#include "mirror/store/render.hpp"

namespace {

using namespace mirror;
using nlohmann::json;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kProvider = 3 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ProviderMismatch: return kProvider;
    case ErrorCode::InvalidArgument: return kUsage;
    default: return kData;
  }
}

void emit(bool as_json, const json& body, const std::string& text) {
  if (as_json) std::cout << body.dump() << "\n";
  else std::cout << text << "\n";
}

std::vector<store::RawInput> read_inputs(const std::vector<std::string>& paths) {
  std::vector<store::RawInput> inputs;
  for (const auto& p : paths) inputs.push_back({p, store::read_file(p)});
  return inputs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic maps of exported watch and listening histories"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_root;
  bool as_json = false;
  app.add_option("--config", config_path, "JSON config file (default: $MIRROR_CONFIG)");
  app.add_option("--data-root", data_root, "Directory holding datasets, caches and overlays");
  app.add_flag("--json", as_json, "Machine-readable output");

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse exports into an events file");
  std::vector<std::string> exports;
  std::string transcripts_path, events_out = "events.jsonl";
  ingest_cmd->add_option("export", exports, "Takeout or Spotify export files")->required();
  ingest_cmd->add_option("--transcripts", transcripts_path, "Sidecar JSON mapping item_id to transcript");
  ingest_cmd->add_option("-o,--output", events_out, "Events file to write");

  auto* build_cmd = app.add_subcommand("build", "Build a map dataset from events or exports");
  std::vector<std::string> build_inputs;
  std::string provider, name;
  std::uint64_t seed = 0;
  build_cmd->add_option("events", build_inputs, "Events files (or raw exports)")->required();
  build_cmd->add_option("--provider", provider, "Embedding provider")->check(CLI::IsMember({"local", "remote"}));
  auto* seed_opt = build_cmd->add_option("--seed", seed, "Layout seed");
  build_cmd->add_option("--name", name, "Dataset name");
  build_cmd->add_option("--transcripts", transcripts_path, "Sidecar JSON mapping item_id to transcript");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  int port = -1;
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");

  auto* overlay_cmd = app.add_subcommand("overlay", "Project one dataset into another's map");
  std::string target_id, other_id;
  overlay_cmd->add_option("target-id", target_id)->required();
  overlay_cmd->add_option("other-id", other_id)->required();

  auto* export_cmd = app.add_subcommand("export", "Export a dataset as JSON or SVG");
  std::string export_id, format = "json", export_out;
  export_cmd->add_option("id", export_id)->required();
  export_cmd->add_option("--format", format)->check(CLI::IsMember({"json", "svg"}));
  export_cmd->add_option("-o,--output", export_out, "Output file (default: stdout)");

  auto* frames_cmd = app.add_subcommand("frames", "List animation frames");
  std::string frames_id, step = "month", mode = "cumulative";
  frames_cmd->add_option("id", frames_id)->required();
  frames_cmd->add_option("--step", step)->check(CLI::IsMember({"month"}));
  frames_cmd->add_option("--mode", mode)->check(CLI::IsMember({"cumulative", "monthly"}));

  auto* list_cmd = app.add_subcommand("list", "List built datasets");

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return kUsage;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("mirror"));
  try {
    auto config = cli::load_config(config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path));
    if (!data_root.empty()) config.data_root = data_root;
    spdlog::set_level(spdlog::level::from_str(config.log_level));

    if (*ingest_cmd) {
      std::optional<std::string> transcripts;
      if (!transcripts_path.empty()) transcripts = store::read_file(transcripts_path);
      const auto inputs = read_inputs(exports);
      const auto events = store::ingest_inputs(inputs, config.build.ingest, transcripts);
      std::ofstream out(events_out, std::ios::binary | std::ios::trunc);
      ingest::write_events_jsonl(out, events);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + events_out);
      emit(as_json, {{"events", events.size()}, {"path", events_out}},
           std::to_string(events.size()) + " events written to " + events_out);
      return kOk;
    }

    if (*build_cmd) {
      if (!provider.empty()) config.embedding_provider = provider;
      if (*seed_opt) config.build.reducer.layout.seed = seed;
      if (!name.empty()) config.build.name = name;
      if (!transcripts_path.empty()) config.build.transcripts = store::read_file(transcripts_path);
      auto providers = cli::make_providers(config);
      store::Providers p{providers.embedding.get(), providers.make_topics};
      store::DatasetStore store(config.data_root);
      const auto result = store::build_dataset(store, read_inputs(build_inputs), config.build, p);
      const auto& m = result.dataset->manifest;
      std::string text = result.reused ? "reused cache: " : "built: ";
      text += result.dataset_id + " (" + std::to_string(m.event_count) + " events, layout " +
              m.positions_sha256.substr(0, 16) + ")";
      emit(as_json,
           {{"dataset_id", result.dataset_id},
            {"reused", result.reused},
            {"event_count", m.event_count},
            {"positions_sha256", m.positions_sha256},
            {"path", store.dataset_dir(result.dataset_id).string()}},
           text);
      return kOk;
    }

    if (*serve_cmd) {
      if (port >= 0) config.port = port;
      store::DatasetStore store(config.data_root);
      server::Server srv(store, cli::server_options(config), cli::make_providers(config));
      if (!srv.listen()) throw Error(ErrorCode::IoError, "cannot bind " + config.bind + ":" + std::to_string(config.port));
      return kOk;
    }

    store::DatasetStore store(config.data_root);

    if (*overlay_cmd) {
      const auto target = store.get(target_id);
      const auto other = store.get(other_id);
      const auto overlay = store::overlay_datasets(*target, *other);
      store::save_overlay(store, overlay);
      emit(as_json,
           {{"overlay_id", overlay.overlay_id},
            {"target_id", overlay.target_id},
            {"other_id", overlay.other_id},
            {"other_count", overlay.other_count}},
           "overlay " + overlay.overlay_id + ": " + std::to_string(overlay.other_count) + " points of " + other_id +
               " placed in " + target_id);
      return kOk;
    }

    if (*export_cmd) {
      const auto ds = store.get(export_id);
      const std::string body = format == "svg" ? store::export_svg(*ds) : store::export_json(*ds).dump(2) + "\n";
      if (export_out.empty()) {
        std::cout << body;
      } else {
        store::write_file(export_out, body);
        emit(as_json, {{"path", export_out}, {"format", format}}, "wrote " + export_out);
      }
      return kOk;
    }

    if (*frames_cmd) {
      const auto ds = store.get(frames_id);
      const auto frames = map::animation_frames(
          ds->events, std::nullopt, mode == "monthly" ? map::FrameMode::Monthly : map::FrameMode::Cumulative);
      json list = json::array();
      std::string text;
      for (const auto& w : frames) {
        const auto count = map::filter_by_time(ds->events, w).size();
        auto j = store::to_json(w);
        j["count"] = count;
        list.push_back(j);
        text += format_instant(w.start) + "  " + format_instant(w.end) + "  " + std::to_string(count) + "\n";
      }
      if (!text.empty()) text.pop_back();
      emit(as_json, {{"dataset_id", frames_id}, {"frames", list}}, text);
      return kOk;
    }

    if (*list_cmd) {
      json list = json::array();
      std::string text;
      for (const auto& m : store.list()) {
        list.push_back(store::to_json(m));
        text += m.dataset_id + "  " + m.name + "  " + std::to_string(m.event_count) + " events\n";
      }
      if (!text.empty()) text.pop_back();
      emit(as_json, {{"datasets", list}}, text);
      return kOk;
    }
  } catch (const Error& e) {
    std::string where;
    if (e.stage()) where += " [stage " + *e.stage() + "]";
    if (e.record()) where += " [record " + std::to_string(*e.record()) + "]";
    std::cerr << "error: " << to_string(e.code()) << where << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
