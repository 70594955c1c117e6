#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace mirror {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

/// Parses "YYYY-MM-DD[(T| )HH:MM[:SS[.frac]]][Z|+HH:MM|-HH:MM|+HHMM]".
/// Strings without a zone designator are read as local time at
/// `default_offset` east of UTC. Throws std::invalid_argument.
Instant parse_instant(std::string_view text,
                      std::chrono::minutes default_offset = std::chrono::minutes{0});

/// "YYYY-MM-DDTHH:MM:SSZ", with ".mmm" when the instant has a millisecond part.
std::string format_instant(Instant t);

/// Midnight UTC on the first day of `t`'s month.
Instant month_floor(Instant t);

Instant add_months(Instant month_start, int months);

}  // namespace mirror
