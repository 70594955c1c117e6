#include "mirror/store/overlay.hpp"

#include "mirror/store/binary_io.hpp"

namespace mirror::store {

using nlohmann::json;

std::string overlay_id_for(const std::string& target_id, const std::string& other_id) {
  return sha256_hex("overlay\n" + target_id + "\n" + other_id).substr(0, 16);
}

Overlay overlay_datasets(const MapDataset& target, const MapDataset& other) {
  const auto& tm = target.manifest;
  const auto& om = other.manifest;
  if (tm.embedding_provider_id != om.embedding_provider_id || tm.embedding_dim != om.embedding_dim)
    throw Error(ErrorCode::ProviderMismatch, "cannot overlay " + om.embedding_provider_id + " (dim " +
                                                 std::to_string(om.embedding_dim) + ") onto " +
                                                 tm.embedding_provider_id + " (dim " +
                                                 std::to_string(tm.embedding_dim) + ")");

  Overlay o;
  o.target_id = tm.dataset_id;
  o.other_id = om.dataset_id;
  o.overlay_id = overlay_id_for(o.target_id, o.other_id);
  const reduce::Layout projected = reduce::transform(target.model, other.vectors);

  const auto nt = static_cast<reduce::Index>(target.events.size());
  const auto no = static_cast<reduce::Index>(other.events.size());
  o.positions.resize(nt + no, 2);
  o.points.reserve(static_cast<std::size_t>(nt + no));
  for (reduce::Index i = 0; i < nt; ++i) {
    const auto& e = target.events[static_cast<std::size_t>(i)];
    o.positions.row(i) = target.positions().row(i);
    o.points.push_back({e.event_id, o.target_id, e.platform, e.kind, o.positions(i, 0), o.positions(i, 1)});
  }
  for (reduce::Index i = 0; i < no; ++i) {
    const auto& e = other.events[static_cast<std::size_t>(i)];
    o.positions.row(nt + i) = projected.row(i);
    o.points.push_back({e.event_id, o.other_id, e.platform, e.kind, projected(i, 0), projected(i, 1)});
  }
  o.other_count = static_cast<std::size_t>(no);
  o.index();
  return o;
}

reduce::Layout projected_positions(const Overlay& overlay) {
  const auto begin = static_cast<reduce::Index>(overlay.other_begin());
  return overlay.positions.bottomRows(overlay.positions.rows() - begin);
}

std::vector<OverlayPoint> query_overlay(const Overlay& overlay, const map::BBox& box) {
  std::vector<OverlayPoint> out;
  for (reduce::Index i : overlay.spatial.query(box)) out.push_back(overlay.points[static_cast<std::size_t>(i)]);
  return out;
}

json to_json(const Overlay& o) {
  json points = json::array();
  for (const auto& p : o.points)
    points.push_back({{"event_id", p.event_id},
                      {"source", p.source_dataset_id},
                      {"platform", ingest::to_string(p.platform)},
                      {"kind", ingest::to_string(p.kind)},
                      {"x", p.x},
                      {"y", p.y}});
  return {{"version", kOverlayVersion},
          {"overlay_id", o.overlay_id},
          {"target_id", o.target_id},
          {"other_id", o.other_id},
          {"other_count", o.other_count},
          {"points", points}};
}

Overlay overlay_from_json(const json& j) {
  if (j.value("version", 0u) != kOverlayVersion)
    throw Error(ErrorCode::UnknownVersion, "unknown overlay format version");
  Overlay o;
  try {
    o.overlay_id = j.at("overlay_id").get<std::string>();
    o.target_id = j.at("target_id").get<std::string>();
    o.other_id = j.at("other_id").get<std::string>();
    o.other_count = j.at("other_count").get<std::size_t>();
    const auto& points = j.at("points");
    o.positions.resize(static_cast<reduce::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      OverlayPoint pt{p.at("event_id").get<std::string>(), p.at("source").get<std::string>(),
                      ingest::platform_from_string(p.at("platform").get<std::string>()),
                      ingest::kind_from_string(p.at("kind").get<std::string>()), p.at("x").get<double>(),
                      p.at("y").get<double>()};
      o.positions(static_cast<reduce::Index>(i), 0) = pt.x;
      o.positions(static_cast<reduce::Index>(i), 1) = pt.y;
      o.points.push_back(std::move(pt));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad overlay file: ") + e.what());
  }
  if (o.other_count > o.points.size()) throw Error(ErrorCode::IoError, "bad overlay file: other_count too large");
  o.index();
  return o;
}

void save_overlay(const DatasetStore& store, const Overlay& overlay) {
  write_file(store.overlay_dir() / (overlay.overlay_id + ".json"), to_json(overlay).dump() + "\n");
}

Overlay load_overlay(const DatasetStore& store, const std::string& overlay_id) {
  if (overlay_id.empty() || overlay_id.find_first_of("/.") != std::string::npos)
    throw Error(ErrorCode::UnknownOverlay, "no overlay with id '" + overlay_id + "'");
  const auto path = store.overlay_dir() / (overlay_id + ".json");
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::UnknownOverlay, "no overlay with id '" + overlay_id + "'");
  try {
    return overlay_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
}

}  // namespace mirror::store
