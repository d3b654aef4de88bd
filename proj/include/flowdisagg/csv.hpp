// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "flowdisagg/timeseries.hpp"

namespace flowdisagg {

/// Shortest decimal text that parses back to exactly `v`. Missing → "".
std::string format_number(double v);

/// Canonical series CSV: header `timestamp_utc,<var1>,...`, ISO-8601 UTC
/// timestamps, empty cell for missing.
void write_csv(const TimeSeries& series, std::ostream& out);
void write_csv(const TimeSeries& series, const std::filesystem::path& path);

/// Reads the canonical CSV. Timestamps must be increasing and aligned to
/// `resolution`; absent timestamps between rows become missing rows.
TimeSeries read_csv(std::istream& in, Resolution resolution,
                    const std::string& source = "<stream>");
TimeSeries read_csv(const std::filesystem::path& path, Resolution resolution);

}  // namespace flowdisagg
