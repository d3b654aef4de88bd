// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowdisagg/matrix.hpp"
#include "flowdisagg/timeseries.hpp"

namespace flowdisagg {

inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kDefaultContextDays = 6;

/// One model sample, in physical units.
struct FeatureWindow {
  UtcDay day;
  /// context_days × (weather features + 1), oldest first; flow is the last
  /// column.
  Matrix context;
  std::vector<double> daily_weather;
  /// 24 × weather features.
  Matrix hourly_weather;
  double daily_flow = 0.0;
  /// Evaluation only; never read by training.
  std::optional<std::vector<double>> hourly_flow;
};

struct WindowSet {
  std::vector<FeatureWindow> windows;
  std::vector<std::string> weather_names;
  /// Candidate days (those with a full context span before them) that failed
  /// the completeness check.
  std::size_t skipped = 0;
  std::string diagnostic;
};

/// Builds one window per day d whose previous `context_days` days have
/// complete daily weather and flow, and whose own daily weather, daily flow
/// and 24 hourly weather rows are complete. Daily and hourly weather must
/// share the same variables in the same order; `daily_flow` must have a
/// single column. Hourly flow, when given and complete for day d, is attached
/// as evaluation truth and must average to the daily flow (1e-6 relative).
WindowSet build_windows(const TimeSeries& daily_weather,
                        const TimeSeries& daily_flow,
                        const TimeSeries& hourly_weather,
                        const TimeSeries* hourly_flow = nullptr,
                        std::size_t context_days = kDefaultContextDays);

/// Throws DataError if the window holds a missing marker or a wrong shape.
void check_window(const FeatureWindow& w);

}  // namespace flowdisagg
