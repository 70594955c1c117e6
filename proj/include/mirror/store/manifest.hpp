#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirror/core/time.hpp"
#include "mirror/map/geometry.hpp"
#include "mirror/reduce/reducer.hpp"
#include "mirror/topics/topics.hpp"

namespace mirror::store {

/// Format version of each persisted component. A loader accepts only these.
namespace versions {
inline constexpr std::uint32_t kManifest = 1;
inline constexpr std::uint32_t kEvents = 1;
inline constexpr std::uint32_t kVectors = 1;
inline constexpr std::uint32_t kPositions = 1;
inline constexpr std::uint32_t kModel = 1;
inline constexpr std::uint32_t kTopics = 1;
inline constexpr std::uint32_t kTree = 1;
inline constexpr std::uint32_t kDensity = 1;
}  // namespace versions

/// File names inside a dataset directory.
namespace files {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kEvents = "events.jsonl";
inline constexpr const char* kVectors = "vectors.bin";
inline constexpr const char* kPositions = "positions.bin";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kTopics = "topics.json";
inline constexpr const char* kTree = "tree.json";
inline constexpr const char* kDensity = "density.bin";
}  // namespace files

struct InputDigest {
  std::string name;
  std::string sha256;
  bool operator==(const InputDigest&) const = default;
};

struct DatasetManifest {
  std::string dataset_id;
  std::string name;
  std::vector<std::string> platforms;
  std::size_t event_count = 0;
  Instant time_min{};
  Instant time_max{};
  std::string embedding_provider_id;
  int embedding_dim = 0;
  reduce::ReducerParams reducer;
  reduce::CurveParams curve;
  std::string topic_provider_id;
  topics::TreeParams tree;
  double density_bandwidth = 0.0;
  std::string density_bandwidth_rule = "scott";
  int density_resolution = 0;
  map::BBox density_extent;
  Instant built_at{};
  std::vector<InputDigest> inputs;
  std::map<std::string, std::uint32_t> versions;  // component -> format version
  std::string positions_sha256;
};

/// The version table a manifest written by this build carries.
std::map<std::string, std::uint32_t> current_versions();

nlohmann::json to_json(const reduce::ReducerParams& p);
reduce::ReducerParams reducer_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DatasetManifest& m);
/// Throws Error{UnknownVersion} when any component version is unknown or
/// missing.
DatasetManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace mirror::store
