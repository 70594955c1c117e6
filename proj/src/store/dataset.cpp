#include "mirror/store/dataset.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "mirror/ingest/events_io.hpp"
#include "mirror/store/binary_io.hpp"

namespace mirror::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kVectorsMagic = "MRVECTRS";
constexpr std::string_view kPositionsMagic = "MRPOSITN";
constexpr std::string_view kModelMagic = "MRMODEL\n";
constexpr std::string_view kDensityMagic = "MRDENSTY";

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
}

void check_version(const json& j, std::uint32_t expected, const fs::path& path) {
  const auto found = j.value("version", 0u);
  if (found != expected)
    throw Error(ErrorCode::UnknownVersion,
                path.string() + ": format version " + std::to_string(found) + ", expected " + std::to_string(expected));
}

}  // namespace

std::size_t MapDataset::row(const std::string& event_id) const {
  const auto it = row_of.find(event_id);
  if (it == row_of.end()) throw Error(ErrorCode::UnknownPoint, "no point with event id '" + event_id + "'");
  return static_cast<std::size_t>(it->second);
}

void MapDataset::index() {
  row_of.clear();
  row_of.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) row_of.emplace(events[i].event_id, static_cast<reduce::Index>(i));
  spatial = map::SpatialIndex(model.positions);
}

void MapDataset::validate() const {
  const auto n = events.size();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::IoError, "dataset is inconsistent: " + what); };
  if (manifest.event_count != n) fail("manifest counts " + std::to_string(manifest.event_count) + " events, found " + std::to_string(n));
  if (static_cast<std::size_t>(vectors.rows()) != n) fail("vector count differs from event count");
  if (static_cast<std::size_t>(model.positions.rows()) != n) fail("position count differs from event count");
  if (assignments.size() != n) fail("topic assignment count differs from event count");
  if (row_of.size() != n) fail("event ids are not unique");
  for (std::size_t i = 0; i < n; ++i)
    if (assignments[i].event_id != events[i].event_id) fail("topic assignments are out of order");
  for (const auto& node : tree.nodes) {
    for (const auto& id : node.member_event_ids)
      if (!row_of.contains(id)) fail("topic '" + node.label + "' references unknown event " + id);
    for (const auto& id : node.region_event_ids)
      if (!row_of.contains(id)) fail("topic '" + node.label + "' region references unknown event " + id);
  }
}

std::vector<reduce::Index> rows_in_window(const MapDataset& ds, const std::optional<map::TimeWindow>& window) {
  std::vector<reduce::Index> rows;
  if (!window) {
    rows.resize(ds.events.size());
    std::iota(rows.begin(), rows.end(), reduce::Index{0});
    return rows;
  }
  for (std::size_t i : map::filter_by_time(ds.events, *window)) rows.push_back(static_cast<reduce::Index>(i));
  return rows;
}

std::vector<ViewportPoint> query_viewport(const MapDataset& ds, const map::BBox& box,
                                          const std::optional<map::TimeWindow>& window) {
  std::vector<ViewportPoint> out;
  for (reduce::Index i : ds.spatial.query(box)) {
    const auto& e = ds.events[static_cast<std::size_t>(i)];
    if (window && !window->contains(e.timestamp)) continue;
    out.push_back({static_cast<std::size_t>(i), e.event_id, e.kind, e.platform, ds.positions()(i, 0),
                   ds.positions()(i, 1)});
  }
  return out;
}

map::DensityGrid window_density(const MapDataset& ds, const std::optional<map::TimeWindow>& window) {
  if (!window) return ds.density;
  const auto rows = rows_in_window(ds, window);
  map::DensityOptions options;
  options.bandwidth = ds.density.bandwidth;
  options.resolution = ds.density.resolution;
  options.extent = ds.density.extent;
  return map::kde_density(ds.positions(), options, std::span<const reduce::Index>(rows));
}

topics::TopicTree window_tree(const MapDataset& ds, const std::optional<map::TimeWindow>& window) {
  topics::TopicTree tree = ds.tree;
  if (!window) return tree;
  for (auto& node : tree.nodes) {
    std::size_t count = 0;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& id : node.member_event_ids) {
      const auto r = ds.row(id);
      if (!window->contains(ds.events[r].timestamp)) continue;
      ++count;
      sum += ds.positions().row(static_cast<reduce::Index>(r)).transpose();
    }
    node.count = count;
    if (count > 0) node.anchor = sum / static_cast<double>(count);
  }
  std::vector<std::size_t> order(tree.nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = tree.nodes[a];
    const auto& y = tree.nodes[b];
    return x.count != y.count ? x.count > y.count : x.rank < y.rank;
  });
  for (std::size_t r = 0; r < order.size(); ++r) tree.nodes[order[r]].rank = static_cast<int>(r + 1);
  return tree;
}

std::vector<map::LabelPlacement> viewport_labels(const MapDataset& ds, const map::BBox& box, int zoom,
                                                 const std::optional<map::TimeWindow>& window,
                                                 const map::LabelMetrics& metrics) {
  if (zoom < 0) throw Error(ErrorCode::InvalidArgument, "zoom must be >= 0");
  const auto tree = window_tree(ds, window);
  return map::place_labels(tree, box, zoom, metrics, [](const topics::TopicNode& n) { return n.count > 0; });
}

std::vector<map::SummaryItem> summary_items(const MapDataset& ds, std::span<const std::size_t> rows) {
  std::vector<map::SummaryItem> items;
  items.reserve(rows.size());
  for (std::size_t r : rows) items.push_back({ds.events[r].event_id, ds.events[r].text_payload, ds.assignments[r].topics});
  return items;
}

void write_model(const fs::path& path, const Model& model) {
  BinaryWriter w(path, kModelMagic, versions::kModel);
  w.put_string(json{{"params", to_json(model.params)},
                    {"curve", {{"a", model.curve.a}, {"b", model.curve.b}}},
                    {"provider_id", model.provider_id}}
                   .dump());
  w.put<std::int64_t>(model.size());
  w.put<std::int64_t>(model.dim());
  w.put_vector(model.vertex_of);
  w.put_vector(model.vertex_row);
  w.put<std::int64_t>(model.knn.n);
  w.put<std::int64_t>(model.knn.k);
  w.put<std::int64_t>(model.knn.row_size);
  w.put_vector(model.knn.entries);
  w.put<std::int64_t>(model.fuzzy.n);
  w.put<double>(model.fuzzy.target);
  w.put_vector(model.fuzzy.edges);
  w.put_vector(model.fuzzy.rho);
  w.put_vector(model.fuzzy.sigma);
  w.put_vector(model.fuzzy.residual);
  w.close();
}

Model read_model(const fs::path& path, const embed::EmbeddingMatrix& training, const reduce::Layout& positions) {
  BinaryReader r(path, kModelMagic, versions::kModel);
  Model m;
  json meta;
  try {
    meta = json::parse(r.get_string());
    m.params = reducer_params_from_json(meta.at("params"));
    m.curve = {meta.at("curve").at("a").get<double>(), meta.at("curve").at("b").get<double>()};
    m.provider_id = meta.at("provider_id").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": bad model header: " + e.what());
  }
  const auto rows = r.get<std::int64_t>();
  const auto cols = r.get<std::int64_t>();
  if (rows != training.rows() || cols != training.cols() || rows != positions.rows())
    throw Error(ErrorCode::IoError, path.string() + ": model shape does not match the dataset vectors");
  m.training = training;
  m.positions = positions;
  m.vertex_of = r.get_vector<reduce::Index>();
  m.vertex_row = r.get_vector<reduce::Index>();
  m.knn.n = r.get<std::int64_t>();
  m.knn.k = r.get<std::int64_t>();
  m.knn.row_size = r.get<std::int64_t>();
  m.knn.entries = r.get_vector<reduce::Neighbor>();
  m.fuzzy.n = r.get<std::int64_t>();
  m.fuzzy.target = r.get<double>();
  m.fuzzy.edges = r.get_vector<reduce::FuzzyEdge>();
  m.fuzzy.rho = r.get_vector<double>();
  m.fuzzy.sigma = r.get_vector<double>();
  m.fuzzy.residual = r.get_vector<double>();
  if (m.vertex_of.size() != static_cast<std::size_t>(rows))
    throw Error(ErrorCode::IoError, path.string() + ": vertex map size does not match the dataset");
  return m;
}

json topics_to_json(const std::string& provider_id, const std::vector<topics::TopicAssignment>& assignments) {
  json items = json::array();
  for (const auto& a : assignments) items.push_back({{"event_id", a.event_id}, {"topics", a.topics}});
  return {{"version", versions::kTopics}, {"provider_id", provider_id}, {"assignments", items}};
}

std::vector<topics::TopicAssignment> topics_from_json(const json& j) {
  std::vector<topics::TopicAssignment> out;
  for (const auto& a : j.at("assignments"))
    out.push_back({a.at("event_id").get<std::string>(), a.at("topics").get<std::vector<std::string>>()});
  return out;
}

json tree_to_json(const topics::TopicTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"label", n.label},
                     {"key", n.key},
                     {"rank", n.rank},
                     {"count", n.count},
                     {"anchor", {n.anchor.x(), n.anchor.y()}},
                     {"zoom_min", n.zoom_min},
                     {"parent", n.parent ? json(*n.parent) : json(nullptr)},
                     {"children", n.children},
                     {"member_event_ids", n.member_event_ids},
                     {"region_event_ids", n.region_event_ids}});
  }
  return {{"version", versions::kTree},
          {"params", {{"levels", tree.params.levels}, {"l0_max", tree.params.l0_max}, {"fanout", tree.params.fanout}}},
          {"roots", tree.roots},
          {"nodes", nodes}};
}

topics::TopicTree tree_from_json(const json& j) {
  topics::TopicTree tree;
  const auto& p = j.at("params");
  tree.params.levels = p.at("levels").get<int>();
  tree.params.l0_max = p.at("l0_max").get<std::size_t>();
  tree.params.fanout = p.at("fanout").get<std::size_t>();
  tree.roots = j.at("roots").get<std::vector<std::size_t>>();
  for (const auto& jn : j.at("nodes")) {
    topics::TopicNode n;
    n.label = jn.at("label").get<std::string>();
    n.key = jn.at("key").get<std::string>();
    n.rank = jn.at("rank").get<int>();
    n.count = jn.at("count").get<std::size_t>();
    const auto a = jn.at("anchor").get<std::vector<double>>();
    if (a.size() != 2) throw Error(ErrorCode::IoError, "tree anchor needs two coordinates");
    n.anchor = {a[0], a[1]};
    n.zoom_min = jn.at("zoom_min").get<int>();
    if (!jn.at("parent").is_null()) n.parent = jn.at("parent").get<std::size_t>();
    n.children = jn.at("children").get<std::vector<std::size_t>>();
    n.member_event_ids = jn.at("member_event_ids").get<std::vector<std::string>>();
    n.region_event_ids = jn.at("region_event_ids").get<std::vector<std::string>>();
    tree.nodes.push_back(std::move(n));
  }
  return tree;
}

void write_density(const fs::path& path, const map::DensityGrid& grid) {
  BinaryWriter w(path, kDensityMagic, versions::kDensity);
  w.put<std::int32_t>(grid.resolution);
  w.put<double>(grid.bandwidth);
  w.put<map::BBox>(grid.extent);
  w.put_array(grid.values.data(), static_cast<std::size_t>(grid.values.size()));
  w.close();
}

map::DensityGrid read_density(const fs::path& path) {
  BinaryReader r(path, kDensityMagic, versions::kDensity);
  map::DensityGrid grid;
  grid.resolution = r.get<std::int32_t>();
  if (grid.resolution < 2 || grid.resolution > 16384) throw Error(ErrorCode::IoError, path.string() + ": bad resolution");
  grid.bandwidth = r.get<double>();
  grid.extent = r.get<map::BBox>();
  grid.values.resize(grid.resolution, grid.resolution);
  r.get_array(grid.values.data(), static_cast<std::size_t>(grid.values.size()));
  return grid;
}

void write_dataset(const fs::path& dir, MapDataset& ds) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / files::kEvents, std::ios::binary | std::ios::trunc);
    ingest::write_events_jsonl(out, ds.events);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / files::kEvents).string());
  }
  write_matrix(dir / files::kVectors, kVectorsMagic, versions::kVectors, ds.vectors);
  write_matrix(dir / files::kPositions, kPositionsMagic, versions::kPositions, ds.model.positions);
  write_model(dir / files::kModel, ds.model);
  write_file(dir / files::kTopics, topics_to_json(ds.manifest.topic_provider_id, ds.assignments).dump() + "\n");
  write_file(dir / files::kTree, tree_to_json(ds.tree).dump() + "\n");
  write_density(dir / files::kDensity, ds.density);
  ds.manifest.positions_sha256 = file_sha256(dir / files::kPositions);
  write_manifest(dir / files::kManifest, ds.manifest);
}

MapDataset load_dataset(const fs::path& dir) {
  MapDataset ds;
  ds.manifest = read_manifest(dir / files::kManifest);
  {
    std::ifstream in(dir / files::kEvents, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + (dir / files::kEvents).string());
    ds.events = ingest::read_events_jsonl(in);
  }
  ds.vectors = read_matrix<embed::EmbeddingMatrix>(dir / files::kVectors, kVectorsMagic, versions::kVectors);
  const auto positions = read_matrix<reduce::Layout>(dir / files::kPositions, kPositionsMagic, versions::kPositions);
  ds.model = read_model(dir / files::kModel, ds.vectors, positions);

  const json topics_json = read_json_file(dir / files::kTopics);
  check_version(topics_json, versions::kTopics, dir / files::kTopics);
  const json tree_json = read_json_file(dir / files::kTree);
  check_version(tree_json, versions::kTree, dir / files::kTree);
  try {
    ds.assignments = topics_from_json(topics_json);
    ds.tree = tree_from_json(tree_json);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, dir.string() + ": bad topic files: " + e.what());
  }
  ds.density = read_density(dir / files::kDensity);
  ds.index();
  ds.validate();
  return ds;
}

FileLock::FileLock(const fs::path& path, bool wait) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::IoError, "cannot open lock file " + path.string());
  if (::flock(fd_, LOCK_EX | (wait ? 0 : LOCK_NB)) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::Locked, path.string() + " is held by another writer");
  }
}

FileLock::~FileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

DatasetStore::DatasetStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "datasets");
  fs::create_directories(cache_dir());
  fs::create_directories(overlay_dir());
}

fs::path DatasetStore::dataset_dir(const std::string& id) const { return root_ / "datasets" / id; }

bool DatasetStore::contains(const std::string& id) const {
  if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) return false;
  return fs::exists(dataset_dir(id) / files::kManifest);
}

std::vector<DatasetManifest> DatasetStore::list() const {
  std::vector<DatasetManifest> out;
  for (const auto& entry : fs::directory_iterator(root_ / "datasets")) {
    if (!entry.is_directory() || !fs::exists(entry.path() / files::kManifest)) continue;
    try {
      out.push_back(read_manifest(entry.path() / files::kManifest));
    } catch (const Error&) {
      continue;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.dataset_id < b.dataset_id; });
  return out;
}

std::shared_ptr<const MapDataset> DatasetStore::get(const std::string& id) const {
  {
    std::shared_lock lock(mutex_);
    if (const auto it = loaded_.find(id); it != loaded_.end()) return it->second;
  }
  if (!contains(id)) throw Error(ErrorCode::UnknownDataset, "no dataset with id '" + id + "'");
  auto ds = std::make_shared<const MapDataset>(load_dataset(dataset_dir(id)));
  std::unique_lock lock(mutex_);
  return loaded_.try_emplace(id, std::move(ds)).first->second;
}

void DatasetStore::invalidate(const std::string& id) {
  std::unique_lock lock(mutex_);
  loaded_.erase(id);
}

}  // namespace mirror::store
