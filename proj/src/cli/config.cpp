#include "mirror/cli/config.hpp"

#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <map>

#include "mirror/embed/local_hash.hpp"

namespace mirror::cli {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

void dispatch(const json& doc, const std::string& path, const std::map<std::string, Setter>& setters) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "config '" + path + "' must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + where + "'");
    try {
      it->second(value);
    } catch (const json::exception&) {
      throw Error(ErrorCode::InvalidArgument, "config key '" + where + "' has the wrong type");
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter set_seconds(std::chrono::seconds& field) {
  return [&field](const json& v) { field = std::chrono::seconds(v.get<long>()); };
}

Setter one_of(std::string& field, std::initializer_list<const char*> allowed, std::string name) {
  std::vector<std::string> values(allowed.begin(), allowed.end());
  return [&field, values, name](const json& v) {
    const auto s = v.get<std::string>();
    if (std::find(values.begin(), values.end(), s) == values.end())
      throw Error(ErrorCode::InvalidArgument, "config '" + name + "' has unsupported value '" + s + "'");
    field = s;
  };
}

}  // namespace

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

void apply_config_json(CliConfig& c, const json& doc) {
  auto& r = c.build.reducer;
  auto section = [](const std::string& name, std::map<std::string, Setter> setters) -> std::pair<const std::string, Setter> {
    return {name, [name, setters = std::move(setters)](const json& v) { dispatch(v, name, setters); }};
  };
  std::map<std::string, Setter> approximate{
      {"enabled", set(r.approximate.enabled)},
      {"min_points", set(r.approximate.min_points)},
      {"trees", set(r.approximate.trees)},
      {"leaf_size", set(r.approximate.leaf_size)},
      {"refinement_rounds", set(r.approximate.refinement_rounds)},
      {"seed", set(r.approximate.seed)}};

  const std::map<std::string, Setter> top{
      {"data_root", [&](const json& v) { c.data_root = v.get<std::string>(); }},
      {"log_level", one_of(c.log_level, {"trace", "debug", "info", "warn", "error", "off"}, "log_level")},
      section("server", {{"bind", set(c.bind)},
                         {"port", set(c.port)},
                         {"cors_origin", set(c.cors_origin)},
                         {"threads", set(c.threads)}}),
      section("embedding", {{"provider", one_of(c.embedding_provider, {"local", "remote"}, "embedding.provider")},
                            {"dim", set(c.local_dim)},
                            {"seed", set(c.local_seed)},
                            {"endpoint", set(c.remote_embedding.endpoint)},
                            {"model", set(c.remote_embedding.model)},
                            {"token", set(c.remote_embedding.token)},
                            {"timeout_s", set_seconds(c.remote_embedding.timeout)},
                            {"batch_size", set(c.build.embed.batch_size)},
                            {"parallelism", set(c.build.embed.parallelism)},
                            {"max_retries", set(c.build.embed.max_retries)}}),
      section("topics", {{"provider", one_of(c.topic_provider, {"tfidf", "remote"}, "topics.provider")},
                         {"endpoint", set(c.remote_topics.endpoint)},
                         {"prompt", set(c.remote_topics.prompt)},
                         {"token", set(c.remote_topics.token)},
                         {"timeout_s", set_seconds(c.remote_topics.timeout)},
                         {"parallelism", set(c.build.topic_parallelism)}}),
      section("summary", {{"provider", one_of(c.summary_provider, {"stub", "remote"}, "summary.provider")},
                          {"endpoint", set(c.remote_summary.endpoint)},
                          {"prompt", set(c.remote_summary.prompt)},
                          {"token", set(c.remote_summary.token)},
                          {"timeout_s", set_seconds(c.remote_summary.timeout)},
                          {"sample_size", set(c.summary_sample_size)}}),
      section("reducer", {{"k", set(r.k)},
                          {"metric", [&](const json& v) { r.metric = reduce::metric_from_string(v.get<std::string>()); }},
                          {"epochs", set(r.layout.epochs)},
                          {"min_dist", set(r.layout.min_dist)},
                          {"spread", set(r.layout.spread)},
                          {"negative_sample_rate", set(r.layout.negative_sample_rate)},
                          {"learning_rate", set(r.layout.learning_rate)},
                          {"repulsion_strength", set(r.layout.repulsion_strength)},
                          {"seed", set(r.layout.seed)},
                          {"transform_epochs", set(r.transform_epochs)},
                          {"approximate", [approximate](const json& v) { dispatch(v, "reducer.approximate", approximate); }}}),
      section("tree", {{"levels", set(c.build.tree.levels)},
                       {"l0_max", set(c.build.tree.l0_max)},
                       {"fanout", set(c.build.tree.fanout)}}),
      section("density", {{"resolution", set(c.build.density_resolution)}}),
      section("ingest",
              {{"skip_threshold_ms", set(c.build.ingest.spotify.skip_threshold_ms)},
               {"local_offset_minutes",
                [&](const json& v) { c.build.ingest.spotify.local_offset = std::chrono::minutes(v.get<long>()); }},
               {"after_search_window_minutes",
                [&](const json& v) { c.build.ingest.after_search_window = std::chrono::minutes(v.get<long>()); }}}),
      section("labels", {{"font_px", set(c.label_metrics.font_px)},
                         {"base_pixels_per_unit", set(c.label_metrics.base_pixels_per_unit)}}),
  };
  dispatch(doc, "", top);
}

void apply_env(CliConfig& c, const EnvLookup& env) {
  if (auto v = env("MIRROR_DATA_ROOT")) c.data_root = *v;
  if (auto v = env("MIRROR_BIND")) c.bind = *v;
  if (auto v = env("MIRROR_PORT")) {
    try {
      c.port = std::stoi(*v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "MIRROR_PORT must be an integer");
    }
  }
  if (auto v = env("MIRROR_LOG_LEVEL")) c.log_level = *v;
  if (auto v = env("MIRROR_EMBEDDING_ENDPOINT")) c.remote_embedding.endpoint = *v;
  if (auto v = env("MIRROR_EMBEDDING_MODEL")) c.remote_embedding.model = *v;
  if (auto v = env("MIRROR_EMBEDDING_TOKEN")) c.remote_embedding.token = *v;
  if (auto v = env("MIRROR_TOPICS_ENDPOINT")) c.remote_topics.endpoint = *v;
  if (auto v = env("MIRROR_TOPICS_TOKEN")) c.remote_topics.token = *v;
  if (auto v = env("MIRROR_SUMMARY_ENDPOINT")) c.remote_summary.endpoint = *v;
  if (auto v = env("MIRROR_SUMMARY_TOKEN")) c.remote_summary.token = *v;
}

CliConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  CliConfig c;
  std::optional<std::filesystem::path> path = file;
  if (!path)
    if (auto v = env("MIRROR_CONFIG")) path = *v;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config file " + path->string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, path->string() + ": " + e.what());
    }
    apply_config_json(c, doc);
  }
  apply_env(c, env);
  return c;
}

json redacted(const CliConfig& c) {
  auto secret = [](const std::string& token) { return token.empty() ? "" : "***"; };
  const auto& r = c.build.reducer;
  return {{"data_root", c.data_root.string()},
          {"log_level", c.log_level},
          {"server", {{"bind", c.bind}, {"port", c.port}, {"cors_origin", c.cors_origin}, {"threads", c.threads}}},
          {"embedding",
           {{"provider", c.embedding_provider},
            {"dim", c.local_dim},
            {"seed", c.local_seed},
            {"endpoint", c.remote_embedding.endpoint},
            {"model", c.remote_embedding.model},
            {"token", secret(c.remote_embedding.token)}}},
          {"topics", {{"provider", c.topic_provider}, {"endpoint", c.remote_topics.endpoint}, {"token", secret(c.remote_topics.token)}}},
          {"summary",
           {{"provider", c.summary_provider},
            {"endpoint", c.remote_summary.endpoint},
            {"token", secret(c.remote_summary.token)},
            {"sample_size", c.summary_sample_size}}},
          {"reducer", store::to_json(r)},
          {"tree", {{"levels", c.build.tree.levels}, {"l0_max", c.build.tree.l0_max}, {"fanout", c.build.tree.fanout}}},
          {"density", {{"resolution", c.build.density_resolution}}}};
}

std::shared_ptr<embed::EmbeddingProvider> make_embedding_provider(const CliConfig& c) {
  if (c.embedding_provider == "remote") return std::make_shared<embed::RemoteHttpProvider>(c.remote_embedding);
  return std::make_shared<embed::LocalHashProvider>(c.local_dim, c.local_seed);
}

server::ProviderSet make_providers(const CliConfig& c) {
  server::ProviderSet p;
  p.embedding = make_embedding_provider(c);
  if (c.topic_provider == "remote") {
    const auto cfg = c.remote_topics;
    if (cfg.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote topic endpoint is not set");
    p.make_topics = [cfg] { return std::make_unique<topics::RemoteTopicProvider>(cfg); };
  } else {
    p.make_topics = [] { return std::make_unique<topics::TfidfTopicProvider>(); };
  }
  if (c.summary_provider == "remote") {
    const auto cfg = c.remote_summary;
    if (cfg.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote summary endpoint is not set");
    p.make_summary = [cfg] { return std::make_unique<map::RemoteSummaryProvider>(cfg); };
  } else {
    p.make_summary = [] { return std::make_unique<map::StubSummaryProvider>(); };
  }
  return p;
}

server::ServerOptions server_options(const CliConfig& c) {
  server::ServerOptions o;
  o.bind = c.bind;
  o.port = c.port;
  o.cors_origin = c.cors_origin;
  o.threads = c.threads;
  o.summary_sample_size = c.summary_sample_size;
  o.label_metrics = c.label_metrics;
  o.build = c.build;
  return o;
}

}  // namespace mirror::cli
