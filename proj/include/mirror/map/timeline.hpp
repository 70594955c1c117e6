#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mirror/core/time.hpp"
#include "mirror/ingest/event.hpp"

namespace mirror::map {

/// Half-open interval [start, end).
struct TimeWindow {
  Instant start;
  Instant end;

  bool valid() const { return start < end; }
  bool contains(Instant t) const { return t >= start && t < end; }
  bool operator==(const TimeWindow&) const = default;
};

/// Throws Error{BadWindow} unless start < end.
TimeWindow make_window(Instant start, Instant end);

/// Indices of events inside `window`, ascending. `events` must be sorted by
/// timestamp.
std::vector<std::size_t> filter_by_time(std::span<const ingest::FootprintEvent> events, const TimeWindow& window);

enum class FrameMode { Cumulative, Monthly };

/// One frame per month starting at the month of `from` (default: the
/// earliest event). Cumulative frames run [from, from + k months); monthly
/// frames cover a single month. The last frame is the first whose end lies
/// past the latest event.
std::vector<TimeWindow> animation_frames(std::span<const ingest::FootprintEvent> events,
                                         std::optional<Instant> from = std::nullopt,
                                         FrameMode mode = FrameMode::Cumulative);

}  // namespace mirror::map
