#include "mirror/ingest/parsers.hpp"

#include <cctype>
#include <stdexcept>

#include <json.hpp>

#include "mirror/core/error.hpp"

namespace mirror::ingest {

using nlohmann::json;

namespace {

constexpr std::string_view kWatchedPrefix = "Watched ";
constexpr std::string_view kSearchedPrefix = "Searched for ";
constexpr std::string_view kAdMarker = "From Google Ads";
constexpr std::string_view kShortsSegment = "/shorts/";

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view skip_bom_ws(std::string_view raw) {
  if (raw.starts_with("\xEF\xBB\xBF")) raw.remove_prefix(3);
  return trim_view(raw);
}

json parse_array(std::string_view raw) {
  raw = skip_bom_ws(raw);
  if (!raw.empty() && raw.front() == '<')
    throw Error(ErrorCode::UnsupportedFormat,
                "HTML export detected; re-export the history as JSON from Takeout");
  json doc = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedExport, "export is not valid JSON", -1);
  if (!doc.is_array()) throw Error(ErrorCode::MalformedExport, "export is not a JSON array", -1);
  return doc;
}

std::optional<std::string> string_field(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

Instant record_time(const json& rec, const char* key, long index, std::chrono::minutes offset) {
  const auto text = string_field(rec, key);
  if (!text) throw Error(ErrorCode::MalformedExport, std::string("record is missing '") + key + "'", index);
  try {
    return parse_instant(*text, offset);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::MalformedExport, e.what(), index);
  }
}

bool has_ad_marker(const json& rec) {
  auto it = rec.find("details");
  if (it == rec.end() || !it->is_array()) return false;
  for (const auto& d : *it) {
    if (d.is_object()) {
      if (auto name = string_field(d, "name"); name && *name == kAdMarker) return true;
    }
  }
  return false;
}

std::string join_payload(const std::string& title, const std::optional<std::string>& channel) {
  if (channel && !channel->empty()) return title + " | " + *channel;
  return title;
}

}  // namespace

ExportFormat detect_format(std::string_view raw) {
  raw = skip_bom_ws(raw);
  if (raw.empty()) return ExportFormat::Unknown;
  if (raw.front() == '<') return ExportFormat::TakeoutHtml;
  const json doc = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) return ExportFormat::Unknown;
  if (doc.empty()) return ExportFormat::TakeoutJson;
  const json& first = doc.front();
  if (!first.is_object()) return ExportFormat::Unknown;
  if (first.contains("msPlayed") || first.contains("ms_played")) return ExportFormat::SpotifyJson;
  if (first.contains("time") && first.contains("title")) return ExportFormat::TakeoutJson;
  return ExportFormat::Unknown;
}

std::optional<std::string> youtube_item_id(std::string_view url) {
  auto take_id = [](std::string_view rest) -> std::optional<std::string> {
    const auto end = rest.find_first_of("&?#/");
    rest = rest.substr(0, end);
    if (rest.empty()) return std::nullopt;
    return std::string(rest);
  };
  if (auto pos = url.find("v="); pos != std::string_view::npos &&
                                 (pos > 0 && (url[pos - 1] == '?' || url[pos - 1] == '&')))
    return take_id(url.substr(pos + 2));
  if (auto pos = url.find(kShortsSegment); pos != std::string_view::npos)
    return take_id(url.substr(pos + kShortsSegment.size()));
  if (auto pos = url.find("youtu.be/"); pos != std::string_view::npos)
    return take_id(url.substr(pos + 9));
  return std::nullopt;
}

std::vector<FootprintEvent> parse_takeout_watch_history(std::string_view raw) {
  const json doc = parse_array(raw);
  std::vector<FootprintEvent> events;
  events.reserve(doc.size());

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    const long index = static_cast<long>(i);
    if (!rec.is_object()) throw Error(ErrorCode::MalformedExport, "record is not an object", index);

    FootprintEvent e;
    e.platform = Platform::YouTube;
    e.timestamp = record_time(rec, "time", index, std::chrono::minutes{0});
    auto title = string_field(rec, "title");
    if (!title) throw Error(ErrorCode::MalformedExport, "record is missing 'title'", index);
    e.url = string_field(rec, "titleUrl");

    if (auto subs = rec.find("subtitles"); subs != rec.end() && subs->is_array() && !subs->empty() &&
                                           subs->front().is_object())
      e.channel_or_artist = string_field(subs->front(), "name");

    std::string_view t = *title;
    if (t.starts_with(kSearchedPrefix)) {
      e.kind = EventKind::Searched;
      e.title = std::string(trim_view(t.substr(kSearchedPrefix.size())));
    } else {
      if (t.starts_with(kWatchedPrefix)) t.remove_prefix(kWatchedPrefix.size());
      e.title = std::string(trim_view(t));
      if (has_ad_marker(rec))
        e.kind = EventKind::Ad;
      else if (e.url && e.url->find(kShortsSegment) != std::string::npos)
        e.kind = EventKind::Short;
      else
        e.kind = EventKind::Watched;
      if (e.url) e.item_id = youtube_item_id(*e.url);
    }
    if (e.title.empty()) e.title = e.url.value_or(*title);
    if (e.title.empty()) throw Error(ErrorCode::MalformedExport, "record has an empty title", index);

    e.text_payload = e.kind == EventKind::Searched ? e.title : join_payload(e.title, e.channel_or_artist);
    events.push_back(std::move(e));
  }
  finalize_events(events);
  return events;
}

std::vector<FootprintEvent> parse_spotify_history(std::string_view raw, const SpotifyOptions& options) {
  const json doc = parse_array(raw);
  std::vector<FootprintEvent> events;
  events.reserve(doc.size());

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    const long index = static_cast<long>(i);
    if (!rec.is_object()) throw Error(ErrorCode::MalformedExport, "record is not an object", index);

    const bool extended = rec.contains("ts");
    const Instant when = record_time(rec, extended ? "ts" : "endTime", index, options.local_offset);

    const auto ms_it = rec.find(extended ? "ms_played" : "msPlayed");
    if (ms_it == rec.end() || !ms_it->is_number())
      throw Error(ErrorCode::MalformedExport, "record is missing play duration", index);
    if (ms_it->get<double>() < static_cast<double>(options.skip_threshold_ms)) continue;

    auto track = string_field(rec, extended ? "master_metadata_track_name" : "trackName");
    auto artist = string_field(rec, extended ? "master_metadata_album_artist_name" : "artistName");
    if (extended && !track) {
      track = string_field(rec, "episode_name");
      artist = string_field(rec, "episode_show_name");
    }
    if (!track || trim_view(*track).empty()) continue;  // nothing to embed

    FootprintEvent e;
    e.platform = Platform::Spotify;
    e.kind = EventKind::Listened;
    e.timestamp = when;
    e.title = std::string(trim_view(*track));
    e.channel_or_artist = artist;
    if (auto uri = string_field(rec, "spotify_track_uri")) {
      constexpr std::string_view prefix = "spotify:track:";
      if (std::string_view(*uri).starts_with(prefix)) {
        e.item_id = uri->substr(prefix.size());
        e.url = "https://open.spotify.com/track/" + *e.item_id;
      }
    }
    e.text_payload = join_payload(e.title, e.channel_or_artist);
    events.push_back(std::move(e));
  }
  finalize_events(events);
  return events;
}

std::vector<FootprintEvent> classify_after_search(std::vector<FootprintEvent> events,
                                                  std::chrono::milliseconds window) {
  std::optional<Instant> last_search;
  for (auto& e : events) {
    if (e.kind == EventKind::Searched) {
      last_search = e.timestamp;
    } else if (e.kind == EventKind::Watched && last_search) {
      const auto elapsed = e.timestamp - *last_search;
      if (elapsed >= std::chrono::milliseconds{0} && elapsed <= window) e.kind = EventKind::WatchedAfterSearch;
    }
  }
  return events;
}

TranscriptMap parse_transcripts(std::string_view raw) {
  raw = skip_bom_ws(raw);
  const json doc = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(ErrorCode::MalformedExport, "transcript sidecar must be a JSON object", -1);
  TranscriptMap out;
  long index = 0;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string())
      throw Error(ErrorCode::MalformedExport, "transcript for '" + key + "' is not a string", index);
    out.emplace(key, value.get<std::string>());
    ++index;
  }
  return out;
}

std::size_t apply_transcripts(std::vector<FootprintEvent>& events, const TranscriptMap& transcripts) {
  std::size_t updated = 0;
  for (auto& e : events) {
    if (!e.item_id) continue;
    auto it = transcripts.find(*e.item_id);
    if (it == transcripts.end() || trim_view(it->second).empty()) continue;
    e.text_payload = it->second;
    ++updated;
  }
  return updated;
}

}  // namespace mirror::ingest
