// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/windows.hpp"

#include <algorithm>
#include <cmath>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {
namespace {

bool row_complete(std::span<const double> row) {
  return std::none_of(row.begin(), row.end(),
                      [](double v) { return is_missing(v); });
}

}  // namespace

WindowSet build_windows(const TimeSeries& daily_weather,
                        const TimeSeries& daily_flow,
                        const TimeSeries& hourly_weather,
                        const TimeSeries* hourly_flow,
                        std::size_t context_days) {
  if (daily_weather.resolution() != Resolution::Daily ||
      daily_flow.resolution() != Resolution::Daily) {
    throw ConfigError("build_windows: daily inputs must have daily resolution");
  }
  if (hourly_weather.resolution() != Resolution::Hourly ||
      (hourly_flow && hourly_flow->resolution() != Resolution::Hourly)) {
    throw ConfigError(
        "build_windows: hourly inputs must have hourly resolution");
  }
  if (daily_flow.cols() != 1) {
    throw ConfigError("build_windows: daily flow must have exactly one column");
  }
  if (hourly_flow && hourly_flow->cols() != 1) {
    throw ConfigError(
        "build_windows: hourly flow must have exactly one column");
  }
  if (daily_weather.names() != hourly_weather.names()) {
    throw ConfigError(
        "build_windows: daily and hourly weather variables differ");
  }
  if (daily_weather.start() != daily_flow.start() ||
      daily_weather.rows() != daily_flow.rows()) {
    throw ConfigError(
        "build_windows: daily weather and daily flow cover different dates");
  }
  if (context_days == 0) throw ConfigError("context_days must be positive");

  WindowSet set;
  set.weather_names = daily_weather.names();
  const std::size_t n_weather = daily_weather.cols();
  const std::size_t n_days = daily_weather.rows();

  auto daily_ok = [&](std::size_t r) {
    return row_complete(daily_weather.row(r)) &&
           row_complete(daily_flow.row(r));
  };

  for (std::size_t d = context_days; d < n_days; ++d) {
    bool ok = daily_ok(d);
    for (std::size_t k = d - context_days; ok && k < d; ++k) ok = daily_ok(k);

    const UtcTime day_start = daily_weather.time_at(d);
    Matrix hourly(kHoursPerDay, n_weather);
    for (std::size_t h = 0; ok && h < kHoursPerDay; ++h) {
      const auto r =
          hourly_weather.row_of(day_start + std::chrono::hours{h});
      if (!r || !row_complete(hourly_weather.row(*r))) {
        ok = false;
        break;
      }
      std::copy(hourly_weather.row(*r).begin(), hourly_weather.row(*r).end(),
                hourly.row(h).begin());
    }
    if (!ok) {
      ++set.skipped;
      continue;
    }

    FeatureWindow w;
    w.day = day_of(day_start);
    w.context = Matrix(context_days, n_weather + 1);
    for (std::size_t i = 0; i < context_days; ++i) {
      const std::size_t r = d - context_days + i;
      auto dst = w.context.row(i);
      std::copy(daily_weather.row(r).begin(), daily_weather.row(r).end(),
                dst.begin());
      dst[n_weather] = daily_flow.at(r, 0);
    }
    w.daily_weather.assign(daily_weather.row(d).begin(),
                           daily_weather.row(d).end());
    w.hourly_weather = std::move(hourly);
    w.daily_flow = daily_flow.at(d, 0);

    if (hourly_flow) {
      std::vector<double> truth;
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        const auto r = hourly_flow->row_of(day_start + std::chrono::hours{h});
        if (!r || is_missing(hourly_flow->at(*r, 0))) break;
        truth.push_back(hourly_flow->at(*r, 0));
      }
      if (truth.size() == kHoursPerDay) {
        double sum = 0.0;
        for (double v : truth) sum += v;
        const double mean = sum / static_cast<double>(kHoursPerDay);
        if (std::abs(mean - w.daily_flow) >
            1e-6 * std::max(std::abs(w.daily_flow), 1e-12)) {
          throw DataError("hourly flow on " + format_day(w.day) +
                          " does not average to the daily flow");
        }
        w.hourly_flow = std::move(truth);
      }
    }
    set.windows.push_back(std::move(w));
  }

  if (set.windows.empty()) {
    set.diagnostic = "no day has " + std::to_string(context_days + 1) +
                     " consecutive complete days of data (" +
                     std::to_string(set.skipped) + " candidate days skipped)";
  } else if (set.skipped > 0) {
    set.diagnostic = std::to_string(set.skipped) +
                     " candidate days skipped for incomplete data";
  }
  return set;
}

void check_window(const FeatureWindow& w) {
  const std::size_t nw = w.daily_weather.size();
  if (w.context.cols() != nw + 1 || w.context.rows() == 0 ||
      w.hourly_weather.rows() != kHoursPerDay ||
      w.hourly_weather.cols() != nw) {
    throw ShapeError("malformed window for " + format_day(w.day));
  }
  auto clean = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  if (!clean(w.context.data()) || !clean(w.daily_weather) ||
      !clean(w.hourly_weather.data()) || !std::isfinite(w.daily_flow) ||
      (w.hourly_flow && !clean(*w.hourly_flow))) {
    throw DataError("window for " + format_day(w.day) +
                    " contains missing values");
  }
}

}  // namespace flowdisagg
