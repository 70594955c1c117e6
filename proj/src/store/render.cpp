#include "mirror/store/render.hpp"

#include <fmt/format.h>

namespace mirror::store {

using nlohmann::json;

json to_json(const ViewportPoint& p) {
  return {{"event_id", p.event_id},
          {"kind", ingest::to_string(p.kind)},
          {"platform", ingest::to_string(p.platform)},
          {"x", p.x},
          {"y", p.y}};
}

json to_json(const OverlayPoint& p) {
  return {{"event_id", p.event_id},
          {"source", p.source_dataset_id},
          {"kind", ingest::to_string(p.kind)},
          {"platform", ingest::to_string(p.platform)},
          {"color", ingest::source_style_of(p.platform).color_hex},
          {"x", p.x},
          {"y", p.y}};
}

json to_json(const map::Contour& c) {
  json points = json::array();
  for (const auto& p : c.points) points.push_back({p.x(), p.y()});
  return {{"level", c.level}, {"closed", c.closed}, {"points", points}};
}

json to_json(const map::LabelPlacement& l) {
  return {{"label", l.label},
          {"rank", l.rank},
          {"zoom_min", l.zoom_min},
          {"anchor", {l.anchor.x(), l.anchor.y()}},
          {"box", {l.box.min_x, l.box.min_y, l.box.max_x, l.box.max_y}}};
}

json to_json(const map::TimeWindow& w) {
  return {{"from", format_instant(w.start)}, {"to", format_instant(w.end)}};
}

json to_json(const map::ViewportSummary& s) {
  return {{"summary", s.text},
          {"seed", s.seed},
          {"visible", s.visible},
          {"sampled", s.sampled_event_ids.size()},
          {"sampled_event_ids", s.sampled_event_ids},
          {"provider_id", s.provider_id},
          {"degraded", s.degraded}};
}

json event_detail(const ingest::FootprintEvent& e, const topics::TopicAssignment& topics,
                  const reduce::Layout& positions, std::size_t row) {
  auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
  json thumbnail = nullptr;
  if (e.platform == ingest::Platform::YouTube && e.item_id)
    thumbnail = "https://i.ytimg.com/vi/" + *e.item_id + "/hqdefault.jpg";
  const auto r = static_cast<reduce::Index>(row);
  return {{"event_id", e.event_id},
          {"timestamp", format_instant(e.timestamp)},
          {"platform", ingest::to_string(e.platform)},
          {"kind", ingest::to_string(e.kind)},
          {"color", ingest::style_of(e.kind).color_hex},
          {"title", e.title},
          {"url", opt(e.url)},
          {"channel", opt(e.channel_or_artist)},
          {"item_id", opt(e.item_id)},
          {"thumbnail_url", thumbnail},
          {"payload", e.text_payload},
          {"topics", topics.topics},
          {"x", positions(r, 0)},
          {"y", positions(r, 1)}};
}

json kind_legend() {
  json out = json::array();
  for (const auto& s : ingest::kind_styles())
    out.push_back({{"kind", ingest::to_string(s.kind)}, {"color", s.color_name}, {"hex", s.color_hex}});
  return out;
}

namespace {

map::BBox full_extent(const MapDataset& ds) { return ds.density.extent; }

std::vector<map::LabelPlacement> level0_labels(const MapDataset& ds) {
  return viewport_labels(ds, full_extent(ds), 0);
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

json export_json(const MapDataset& ds) {
  json points = json::array();
  for (const auto& p : query_viewport(ds, full_extent(ds))) points.push_back(to_json(p));
  json contours = json::array();
  for (const auto& c : map::contour_lines(ds.density, map::default_levels(ds.density))) contours.push_back(to_json(c));
  json labels = json::array();
  for (const auto& l : level0_labels(ds)) labels.push_back(to_json(l));
  return {{"manifest", to_json(ds.manifest)},
          {"legend", kind_legend()},
          {"points", points},
          {"contours", contours},
          {"labels", labels}};
}

std::string export_svg(const MapDataset& ds, const SvgOptions& options) {
  const auto box = full_extent(ds);
  const double sx = options.width / box.width();
  const double sy = options.height / box.height();
  auto px = [&](double x) { return (x - box.min_x) * sx; };
  auto py = [&](double y) { return options.height - (y - box.min_y) * sy; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n",
      options.width, options.height);

  svg += "<g id=\"contours\" fill=\"none\" stroke=\"#555555\" stroke-width=\"0.8\" stroke-opacity=\"0.6\">\n";
  for (const auto& c : map::contour_lines(ds.density, map::default_levels(ds.density))) {
    std::string pts;
    for (const auto& p : c.points) pts += fmt::format("{:.2f},{:.2f} ", px(p.x()), py(p.y()));
    svg += fmt::format("<{} points=\"{}\"/>\n", c.closed ? "polygon" : "polyline", pts);
  }
  svg += "</g>\n<g id=\"points\">\n";
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    const auto r = static_cast<reduce::Index>(i);
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"/>\n", px(ds.positions()(r, 0)),
                       py(ds.positions()(r, 1)), options.point_radius, ingest::style_of(ds.events[i].kind).color_hex);
  }
  svg += "</g>\n<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">\n";
  for (const auto& l : level0_labels(ds))
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" dominant-baseline=\"middle\">{}</text>\n", px(l.anchor.x()),
                       py(l.anchor.y()), escape_xml(l.label));
  svg += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  int row = 0;
  for (const auto& s : ingest::kind_styles()) {
    const int y = 16 + 16 * row++;
    svg += fmt::format("<circle cx=\"14\" cy=\"{}\" r=\"5\" fill=\"{}\"/><text x=\"24\" y=\"{}\">{}</text>\n", y - 4,
                       s.color_hex, y, ingest::to_string(s.kind));
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace mirror::store
