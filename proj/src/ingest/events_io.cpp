#include "mirror/ingest/events_io.hpp"

#include <istream>
#include <ostream>

#include "mirror/core/error.hpp"

namespace mirror::ingest {

using nlohmann::json;

namespace {

json optional_field(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> read_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

json to_json(const FootprintEvent& e) {
  return json{
      {"event_id", e.event_id},
      {"timestamp", format_instant(e.timestamp)},
      {"platform", to_string(e.platform)},
      {"kind", to_string(e.kind)},
      {"title", e.title},
      {"url", optional_field(e.url)},
      {"channel_or_artist", optional_field(e.channel_or_artist)},
      {"item_id", optional_field(e.item_id)},
      {"text_payload", e.text_payload},
  };
}

FootprintEvent event_from_json(const json& j) {
  FootprintEvent e;
  e.event_id = j.at("event_id").get<std::string>();
  e.timestamp = parse_instant(j.at("timestamp").get<std::string>());
  e.platform = platform_from_string(j.at("platform").get<std::string>());
  e.kind = kind_from_string(j.at("kind").get<std::string>());
  if (!kind_allowed(e.platform, e.kind))
    throw Error(ErrorCode::InvalidArgument, "kind not valid for platform");
  e.title = j.at("title").get<std::string>();
  e.url = read_optional(j, "url");
  e.channel_or_artist = read_optional(j, "channel_or_artist");
  e.item_id = read_optional(j, "item_id");
  e.text_payload = j.at("text_payload").get<std::string>();
  if (e.text_payload.empty()) throw Error(ErrorCode::InvalidArgument, "empty text_payload");
  return e;
}

void write_events_jsonl(std::ostream& out, std::span<const FootprintEvent> events) {
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

std::vector<FootprintEvent> read_events_jsonl(std::istream& in) {
  std::vector<FootprintEvent> events;
  std::string line;
  long index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      ++index;
      continue;
    }
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedExport, e.what(), index);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedExport, std::string("bad event line: ") + e.what(), index);
    }
    ++index;
  }
  return events;
}

}  // namespace mirror::ingest
