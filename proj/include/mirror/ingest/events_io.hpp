#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirror/ingest/event.hpp"

namespace mirror::ingest {

nlohmann::json to_json(const FootprintEvent& e);
FootprintEvent event_from_json(const nlohmann::json& j);

void write_events_jsonl(std::ostream& out, std::span<const FootprintEvent> events);

/// Reads one event per non-blank line. Throws Error{MalformedExport} with
/// the zero-based line index on a bad line.
std::vector<FootprintEvent> read_events_jsonl(std::istream& in);

}  // namespace mirror::ingest
