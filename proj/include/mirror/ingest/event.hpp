#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mirror/core/time.hpp"

namespace mirror::ingest {

enum class Platform { YouTube, Spotify };

enum class EventKind { Watched, Searched, WatchedAfterSearch, Ad, Short, Listened };

std::string_view to_string(Platform p);
std::string_view to_string(EventKind k);
Platform platform_from_string(std::string_view s);
EventKind kind_from_string(std::string_view s);

/// Whether `kind` can occur on `platform` (Listened is Spotify-only, the
/// other five kinds are YouTube-only).
bool kind_allowed(Platform platform, EventKind kind);

/// One timestamped interaction recovered from a personal data export.
struct FootprintEvent {
  std::string event_id;
  Instant timestamp;
  Platform platform = Platform::YouTube;
  EventKind kind = EventKind::Watched;
  std::string title;
  std::optional<std::string> url;
  std::optional<std::string> channel_or_artist;
  std::optional<std::string> item_id;
  /// Text handed to the embedding provider. Never empty.
  std::string text_payload;

  bool operator==(const FootprintEvent&) const = default;
};

struct KindStyle {
  EventKind kind;
  std::string_view color_name;
  std::string_view color_hex;
};

/// The interface legend: Watched pink, Searched purple, WatchedAfterSearch
/// yellow, Ad green, Short blue, Listened teal.
std::span<const KindStyle> kind_styles();
const KindStyle& style_of(EventKind kind);

struct SourceStyle {
  Platform platform;
  std::string_view color_name;
  std::string_view color_hex;
};

/// Per-platform colors used when two datasets are overlaid.
const SourceStyle& source_style_of(Platform platform);

/// Stable id derived from platform, timestamp, url and title.
std::string compute_event_id(const FootprintEvent& e, unsigned occurrence = 0);

/// Stable-sorts by timestamp and assigns event ids; identical records get
/// an occurrence counter folded into the hash so ids stay unique.
void finalize_events(std::vector<FootprintEvent>& events);

}  // namespace mirror::ingest
