#include "mirror/map/timeline.hpp"

#include <algorithm>

#include "mirror/core/error.hpp"

namespace mirror::map {

TimeWindow make_window(Instant start, Instant end) {
  if (!(start < end)) throw Error(ErrorCode::BadWindow, "time window start must precede its end");
  return {start, end};
}

std::vector<std::size_t> filter_by_time(std::span<const ingest::FootprintEvent> events, const TimeWindow& window) {
  auto before = [](const ingest::FootprintEvent& e, Instant t) { return e.timestamp < t; };
  const auto lo = std::lower_bound(events.begin(), events.end(), window.start, before);
  const auto hi = std::lower_bound(lo, events.end(), window.end, before);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(hi - lo));
  for (auto it = lo; it != hi; ++it) out.push_back(static_cast<std::size_t>(it - events.begin()));
  return out;
}

std::vector<TimeWindow> animation_frames(std::span<const ingest::FootprintEvent> events, std::optional<Instant> from,
                                         FrameMode mode) {
  std::vector<TimeWindow> frames;
  if (events.empty()) return frames;
  const auto [lo, hi] = std::minmax_element(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });
  const Instant last = hi->timestamp;
  const Instant start = month_floor(from.value_or(lo->timestamp));
  if (start > last) return frames;
  for (int k = 1;; ++k) {
    const Instant end = add_months(start, k);
    frames.push_back({mode == FrameMode::Cumulative ? start : add_months(start, k - 1), end});
    if (end > last) break;
  }
  return frames;
}

}  // namespace mirror::map
