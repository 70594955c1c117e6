#include "mirror/ingest/event.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "mirror/core/error.hpp"
#include "mirror/core/hash.hpp"

namespace mirror::ingest {

namespace {

constexpr std::array<KindStyle, 6> kKindStyles{{
    {EventKind::Watched, "pink", "#ff69b4"},
    {EventKind::Searched, "purple", "#8e44ad"},
    {EventKind::WatchedAfterSearch, "yellow", "#f1c40f"},
    {EventKind::Ad, "green", "#27ae60"},
    {EventKind::Short, "blue", "#2e86de"},
    {EventKind::Listened, "teal", "#16a085"},
}};

constexpr std::array<SourceStyle, 2> kSourceStyles{{
    {Platform::YouTube, "green", "#27ae60"},
    {Platform::Spotify, "purple", "#8e44ad"},
}};

}  // namespace

std::string_view to_string(Platform p) {
  return p == Platform::YouTube ? "YouTube" : "Spotify";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Watched: return "Watched";
    case EventKind::Searched: return "Searched";
    case EventKind::WatchedAfterSearch: return "WatchedAfterSearch";
    case EventKind::Ad: return "Ad";
    case EventKind::Short: return "Short";
    case EventKind::Listened: return "Listened";
  }
  return "Watched";
}

Platform platform_from_string(std::string_view s) {
  if (s == "YouTube") return Platform::YouTube;
  if (s == "Spotify") return Platform::Spotify;
  throw Error(ErrorCode::InvalidArgument, "unknown platform '" + std::string(s) + "'");
}

EventKind kind_from_string(std::string_view s) {
  for (const auto& style : kKindStyles)
    if (to_string(style.kind) == s) return style.kind;
  throw Error(ErrorCode::InvalidArgument, "unknown event kind '" + std::string(s) + "'");
}

bool kind_allowed(Platform platform, EventKind kind) {
  return (kind == EventKind::Listened) == (platform == Platform::Spotify);
}

std::span<const KindStyle> kind_styles() { return kKindStyles; }

const KindStyle& style_of(EventKind kind) {
  return kKindStyles[static_cast<std::size_t>(kind)];
}

const SourceStyle& source_style_of(Platform platform) {
  return kSourceStyles[static_cast<std::size_t>(platform)];
}

std::string compute_event_id(const FootprintEvent& e, unsigned occurrence) {
  FieldHasher h;
  h.add(to_string(e.platform)).add(format_instant(e.timestamp)).add(e.url.value_or("")).add(e.title);
  if (occurrence > 0) h.add(std::to_string(occurrence));
  return h.hex();
}

void finalize_events(std::vector<FootprintEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  std::unordered_map<std::string, unsigned> seen;
  seen.reserve(events.size());
  for (auto& e : events) {
    unsigned occurrence = 0;
    std::string id = compute_event_id(e, occurrence);
    while (seen.contains(id)) id = compute_event_id(e, ++occurrence);
    seen.emplace(id, 0);
    e.event_id = std::move(id);
  }
}

}  // namespace mirror::ingest
