// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace flowdisagg {

using UtcTime = std::chrono::sys_seconds;
using UtcDay = std::chrono::sys_days;

/// Parses ISO-8601 UTC timestamps: `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM`,
/// `YYYY-MM-DDTHH:MM:SS`, optional fractional seconds (ignored when zero) and
/// an optional trailing `Z` or `+00:00`. Throws ParseError.
UtcTime parse_utc(std::string_view text);

/// Parses `YYYY-MM-DD`.
UtcDay parse_day(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_utc(UtcTime t);

/// `YYYY-MM-DD`
std::string format_day(UtcDay d);

inline UtcDay day_of(UtcTime t) {
  return std::chrono::floor<std::chrono::days>(t);
}

}  // namespace flowdisagg
