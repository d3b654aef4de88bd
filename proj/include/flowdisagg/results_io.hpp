// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "flowdisagg/disagg.hpp"
#include "flowdisagg/timeseries.hpp"

namespace flowdisagg {

/// `day,hour,raw,corrected,observed_daily_avg[,truth]`, 24 rows per day. The
/// truth column is written when every result carries truth.
void write_results_csv(std::span<const DisaggResult> results, std::ostream& out);
void write_results_csv(std::span<const DisaggResult> results,
                       const std::filesystem::path& path);

std::vector<DisaggResult> read_results_csv(const std::filesystem::path& path);

/// Hourly series named `flow` covering the result days; `corrected` picks the
/// corrected or raw values. Days between results are missing rows.
TimeSeries results_to_series(std::span<const DisaggResult> results,
                             bool corrected = true);

}  // namespace flowdisagg
