#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mirror/ingest/event.hpp"

namespace mirror::ingest {

enum class ExportFormat { TakeoutJson, TakeoutHtml, SpotifyJson, Unknown };

/// Sniffs an export by its first bytes and first record's keys.
ExportFormat detect_format(std::string_view raw);

/// Google Takeout "watch-history.json". Throws Error{MalformedExport} with
/// the record index, or Error{UnsupportedFormat} for the HTML export.
std::vector<FootprintEvent> parse_takeout_watch_history(std::string_view raw);

struct SpotifyOptions {
  long skip_threshold_ms = 30'000;
  /// Offset applied to timestamps that carry no zone designator.
  std::chrono::minutes local_offset{0};
};

/// Spotify "StreamingHistory*.json" (endTime/msPlayed) or the extended
/// "Streaming_History_Audio_*.json" (ts/ms_played) export.
std::vector<FootprintEvent> parse_spotify_history(std::string_view raw,
                                                  const SpotifyOptions& options = {});

inline constexpr std::chrono::minutes kDefaultAfterSearchWindow{10};

/// Watched events within `window` after the most recent search become
/// WatchedAfterSearch. Events must already be sorted by timestamp.
std::vector<FootprintEvent> classify_after_search(
    std::vector<FootprintEvent> events,
    std::chrono::milliseconds window = kDefaultAfterSearchWindow);

using TranscriptMap = std::unordered_map<std::string, std::string>;

/// Sidecar JSON object mapping item_id to transcript text.
TranscriptMap parse_transcripts(std::string_view raw);

/// Replaces text_payload with the transcript for events whose item_id has
/// a non-empty entry. Returns how many events were updated.
std::size_t apply_transcripts(std::vector<FootprintEvent>& events, const TranscriptMap& transcripts);

/// Extracts the video id from watch?v=, /shorts/ and youtu.be/ urls.
std::optional<std::string> youtube_item_id(std::string_view url);

}  // namespace mirror::ingest
