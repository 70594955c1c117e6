#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "mirror/embed/remote_http.hpp"
#include "mirror/map/summary.hpp"
#include "mirror/server/server.hpp"
#include "mirror/store/build.hpp"

namespace mirror::cli {

struct CliConfig {
  std::filesystem::path data_root = "mirror-data";
  std::string log_level = "info";

  std::string bind = "127.0.0.1";
  int port = 8787;
  std::string cors_origin = "*";
  std::size_t threads = 8;

  std::string embedding_provider = "local";  // local | remote
  int local_dim = 64;
  std::uint64_t local_seed = 42;
  embed::RemoteEmbeddingConfig remote_embedding;

  std::string topic_provider = "tfidf";  // tfidf | remote
  topics::RemoteTopicConfig remote_topics;

  std::string summary_provider = "stub";  // stub | remote
  map::RemoteSummaryConfig remote_summary;
  std::size_t summary_sample_size = 20;

  map::LabelMetrics label_metrics;
  store::BuildConfig build;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

/// Reads the process environment.
std::optional<std::string> process_env(const char* name);

/// Applies a JSON config document over the defaults. Unknown keys and
/// wrongly typed values throw Error{InvalidArgument} naming the key path.
void apply_config_json(CliConfig& config, const nlohmann::json& doc);

/// Overrides from MIRROR_DATA_ROOT, MIRROR_BIND, MIRROR_PORT, MIRROR_LOG_LEVEL,
/// MIRROR_EMBEDDING_ENDPOINT, MIRROR_EMBEDDING_MODEL, MIRROR_EMBEDDING_TOKEN,
/// MIRROR_TOPICS_ENDPOINT, MIRROR_TOPICS_TOKEN, MIRROR_SUMMARY_ENDPOINT and
/// MIRROR_SUMMARY_TOKEN.
void apply_env(CliConfig& config, const EnvLookup& env);

/// Defaults, then the file (explicit path, else MIRROR_CONFIG), then the
/// environment.
CliConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

/// Effective configuration with credentials replaced by "***".
nlohmann::json redacted(const CliConfig& config);

std::shared_ptr<embed::EmbeddingProvider> make_embedding_provider(const CliConfig& config);
server::ProviderSet make_providers(const CliConfig& config);
server::ServerOptions server_options(const CliConfig& config);

}  // namespace mirror::cli
