#include "mirror/store/manifest.hpp"

#include "mirror/store/binary_io.hpp"

namespace mirror::store {

using nlohmann::json;

std::map<std::string, std::uint32_t> current_versions() {
  return {{"manifest", versions::kManifest}, {"events", versions::kEvents},   {"vectors", versions::kVectors},
          {"positions", versions::kPositions}, {"model", versions::kModel},  {"topics", versions::kTopics},
          {"tree", versions::kTree},           {"density", versions::kDensity}};
}

json to_json(const reduce::ReducerParams& p) {
  return {{"k", p.k},
          {"metric", reduce::to_string(p.metric)},
          {"epochs", p.layout.epochs},
          {"min_dist", p.layout.min_dist},
          {"spread", p.layout.spread},
          {"negative_sample_rate", p.layout.negative_sample_rate},
          {"learning_rate", p.layout.learning_rate},
          {"repulsion_strength", p.layout.repulsion_strength},
          {"seed", p.layout.seed},
          {"transform_epochs", p.transform_epochs},
          {"approximate",
           {{"enabled", p.approximate.enabled},
            {"min_points", p.approximate.min_points},
            {"trees", p.approximate.trees},
            {"leaf_size", p.approximate.leaf_size},
            {"refinement_rounds", p.approximate.refinement_rounds},
            {"seed", p.approximate.seed}}}};
}

reduce::ReducerParams reducer_params_from_json(const json& j) {
  reduce::ReducerParams p;
  p.k = j.at("k").get<reduce::Index>();
  p.metric = reduce::metric_from_string(j.at("metric").get<std::string>());
  p.layout.epochs = j.at("epochs").get<int>();
  p.layout.min_dist = j.at("min_dist").get<double>();
  p.layout.spread = j.at("spread").get<double>();
  p.layout.negative_sample_rate = j.at("negative_sample_rate").get<int>();
  p.layout.learning_rate = j.at("learning_rate").get<double>();
  p.layout.repulsion_strength = j.at("repulsion_strength").get<double>();
  p.layout.seed = j.at("seed").get<std::uint64_t>();
  p.transform_epochs = j.at("transform_epochs").get<int>();
  const auto& a = j.at("approximate");
  p.approximate.enabled = a.at("enabled").get<bool>();
  p.approximate.min_points = a.at("min_points").get<reduce::Index>();
  p.approximate.trees = a.at("trees").get<int>();
  p.approximate.leaf_size = a.at("leaf_size").get<reduce::Index>();
  p.approximate.refinement_rounds = a.at("refinement_rounds").get<int>();
  p.approximate.seed = a.at("seed").get<std::uint64_t>();
  return p;
}

json to_json(const DatasetManifest& m) {
  json inputs = json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"name", in.name}, {"sha256", in.sha256}});
  return {{"dataset_id", m.dataset_id},
          {"name", m.name},
          {"platforms", m.platforms},
          {"event_count", m.event_count},
          {"time_span", {{"min", format_instant(m.time_min)}, {"max", format_instant(m.time_max)}}},
          {"embedding", {{"provider_id", m.embedding_provider_id}, {"dim", m.embedding_dim}}},
          {"reducer", to_json(m.reducer)},
          {"curve", {{"a", m.curve.a}, {"b", m.curve.b}}},
          {"topics",
           {{"provider_id", m.topic_provider_id},
            {"levels", m.tree.levels},
            {"l0_max", m.tree.l0_max},
            {"fanout", m.tree.fanout}}},
          {"density",
           {{"bandwidth", m.density_bandwidth},
            {"bandwidth_rule", m.density_bandwidth_rule},
            {"resolution", m.density_resolution},
            {"extent", {m.density_extent.min_x, m.density_extent.min_y, m.density_extent.max_x, m.density_extent.max_y}}}},
          {"built_at", format_instant(m.built_at)},
          {"inputs", inputs},
          {"positions_sha256", m.positions_sha256},
          {"versions", m.versions}};
}

DatasetManifest manifest_from_json(const json& j) {
  if (!j.is_object() || !j.contains("versions") || !j["versions"].is_object())
    throw Error(ErrorCode::UnknownVersion, "manifest has no version table");
  DatasetManifest m;
  m.versions = j["versions"].get<std::map<std::string, std::uint32_t>>();
  for (const auto& [component, version] : current_versions()) {
    const auto it = m.versions.find(component);
    if (it == m.versions.end())
      throw Error(ErrorCode::UnknownVersion, "manifest lacks a version for '" + component + "'");
    if (it->second != version)
      throw Error(ErrorCode::UnknownVersion, "unknown " + component + " format version " +
                                                 std::to_string(it->second) + " (supported: " +
                                                 std::to_string(version) + ")");
  }
  for (const auto& [component, version] : m.versions)
    if (!current_versions().contains(component))
      throw Error(ErrorCode::UnknownVersion, "unknown manifest component '" + component + "'");

  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.name = j.at("name").get<std::string>();
    m.platforms = j.at("platforms").get<std::vector<std::string>>();
    m.event_count = j.at("event_count").get<std::size_t>();
    m.time_min = parse_instant(j.at("time_span").at("min").get<std::string>());
    m.time_max = parse_instant(j.at("time_span").at("max").get<std::string>());
    m.embedding_provider_id = j.at("embedding").at("provider_id").get<std::string>();
    m.embedding_dim = j.at("embedding").at("dim").get<int>();
    m.reducer = reducer_params_from_json(j.at("reducer"));
    m.curve = {j.at("curve").at("a").get<double>(), j.at("curve").at("b").get<double>()};
    const auto& t = j.at("topics");
    m.topic_provider_id = t.at("provider_id").get<std::string>();
    m.tree.levels = t.at("levels").get<int>();
    m.tree.l0_max = t.at("l0_max").get<std::size_t>();
    m.tree.fanout = t.at("fanout").get<std::size_t>();
    const auto& d = j.at("density");
    m.density_bandwidth = d.at("bandwidth").get<double>();
    m.density_bandwidth_rule = d.at("bandwidth_rule").get<std::string>();
    m.density_resolution = d.at("resolution").get<int>();
    const auto e = d.at("extent").get<std::vector<double>>();
    if (e.size() != 4) throw Error(ErrorCode::IoError, "manifest density extent needs four numbers");
    m.density_extent = {e[0], e[1], e[2], e[3]};
    m.built_at = parse_instant(j.at("built_at").get<std::string>());
    for (const auto& in : j.at("inputs"))
      m.inputs.push_back({in.at("name").get<std::string>(), in.at("sha256").get<std::string>()});
    m.positions_sha256 = j.value("positions_sha256", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("manifest is incomplete: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::IoError, std::string("manifest has a bad timestamp: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  write_file(path, to_json(m).dump(2) + "\n");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

}  // namespace mirror::store
