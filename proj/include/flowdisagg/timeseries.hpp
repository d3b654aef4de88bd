// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdisagg/matrix.hpp"
#include "flowdisagg/utc.hpp"

namespace flowdisagg {

enum class Resolution { Hourly, Daily };

const char* to_string(Resolution r) noexcept;
std::chrono::seconds step_of(Resolution r) noexcept;

/// Missing observations are stored as quiet NaN; every other entry is finite.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Unit string used when a variable's unit is not given explicitly.
std::string default_unit(const std::string& variable);

/// Fixed-resolution UTC time series: one row per step from `start`, one column
/// per variable. Gaps are explicit missing rows. Immutable after construction.
class TimeSeries {
 public:
  TimeSeries() = default;

  /// Validates the invariants (unique names, start aligned to the resolution,
  /// finite-or-missing values, shape). Throws DataError / ShapeError.
  TimeSeries(UtcTime start, Resolution resolution,
             std::vector<std::string> names, std::vector<std::string> units,
             Matrix values);

  /// Same, with units taken from default_unit().
  TimeSeries(UtcTime start, Resolution resolution,
             std::vector<std::string> names, Matrix values);

  UtcTime start() const noexcept { return start_; }
  Resolution resolution() const noexcept { return resolution_; }
  /// Timestamp of the last row (start when empty).
  UtcTime last() const noexcept;
  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }
  bool empty() const noexcept { return values_.rows() == 0; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<std::string>& units() const noexcept { return units_; }
  const Matrix& values() const noexcept { return values_; }

  double at(std::size_t row, std::size_t col) const noexcept {
    return values_(row, col);
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return values_.row(r);
  }
  UtcTime time_at(std::size_t row) const noexcept;

  /// Row holding timestamp `t`, if inside the span and aligned.
  std::optional<std::size_t> row_of(UtcTime t) const noexcept;

  /// Column index of `name`; throws ConfigError when absent.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;

  /// Rows whose timestamps fall on days [first, last] (inclusive).
  TimeSeries slice_days(UtcDay first, UtcDay last) const;

  /// New series restricted to the named columns, in that order.
  TimeSeries select(const std::vector<std::string>& names) const;

  std::size_t missing_count() const noexcept;

  friend bool operator==(const TimeSeries& a, const TimeSeries& b);

 private:
  UtcTime start_{};
  Resolution resolution_ = Resolution::Daily;
  std::vector<std::string> names_;
  std::vector<std::string> units_;
  Matrix values_;
};

enum class AggregateRule { Mean, Sum };

/// Default rule for a variable name: Sum for precipitation-like names
/// (precipitation, rain, snowfall), Mean otherwise.
AggregateRule default_rule(const std::string& variable);

/// Collapses an hourly series to UTC days. A day's entry for a variable is
/// defined only when all 24 hours of that variable are present; otherwise it
/// is missing. Every variable needs a rule; rules for unknown variables are a
/// ConfigError.
TimeSeries aggregate_hourly_to_daily(
    const TimeSeries& hourly,
    const std::map<std::string, AggregateRule>& rules);

/// aggregate_hourly_to_daily with default_rule() for every variable.
TimeSeries aggregate_hourly_to_daily(const TimeSeries& hourly);

}  // namespace flowdisagg
