// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdisagg/disagg.hpp"
#include "flowdisagg/timeseries.hpp"

namespace flowdisagg {

/// Hourly series from daily averages: each day's value is anchored at 12:00
/// UTC, hours between anchors are linear, hours before the first / after the
/// last anchor stay flat. Missing days are bridged by their neighbours.
TimeSeries linear_interpolate(const TimeSeries& daily);

/// Every hour equals its day's average.
TimeSeries uniform_disaggregate(const TimeSeries& daily);

double mae(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);

/// |mean(hourly) − daily_avg|
double mean_preservation_error(std::span<const double> hourly, double daily_avg);

/// var(pred) / var(truth), population variances. nullopt when var(truth)
/// is zero.
std::optional<double> variance_ratio(std::span<const double> pred,
                                     std::span<const double> truth);

struct DayMetrics {
  UtcDay day;
  std::string method;
  double mae = 0.0;
  double rmse = 0.0;
  double mean_preservation_error = 0.0;
  std::optional<double> variance_ratio;
};

struct MethodSummary {
  std::string method;
  std::size_t days = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double mean_preservation_error = 0.0;
  /// Mean over the days where it is defined.
  std::optional<double> variance_ratio;
  std::size_t variance_days = 0;
  std::size_t negative_predictions = 0;
};

/// Hourly values kept for plotting.
struct DaySeries {
  double daily_avg = 0.0;
  std::vector<double> truth;
  std::map<std::string, std::vector<double>> methods;
};

struct EvalReport {
  /// Ordered by day, then method name.
  std::vector<DayMetrics> rows;
  /// Ordered by method name.
  std::vector<MethodSummary> summary;
  std::map<UtcDay, DaySeries> series;
  /// Days whose truth has zero variance (variance ratio undefined).
  std::size_t zero_variance_days = 0;
  /// Free-form notes (e.g. skipped windows upstream).
  std::vector<std::string> notes;

  const MethodSummary& method(const std::string& name) const;
};

/// Scores each method against hourly truth on every day where `daily` has a
/// value. Methods and truth must provide 24 complete values for each of those
/// days; otherwise DataError naming the day.
EvalReport compare_methods(const std::map<std::string, TimeSeries>& methods,
                           const TimeSeries& truth, const TimeSeries& daily);

/// `day,method,mae,rmse,mean_preservation_error,variance_ratio`
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
/// `method,days,mae,rmse,mean_preservation_error,variance_ratio,variance_days,negative_predictions`
void write_summary_csv(const EvalReport& report,
                       const std::filesystem::path& path);

/// For each selected day writes `day_<date>.csv`
/// (`hour,truth,model_raw,model_corrected,interpolation`) and a line chart
/// `day_<date>.svg`. Output bytes depend only on the inputs. An empty
/// selection is a ConfigError and creates nothing.
std::vector<std::filesystem::path> emit_figure_data(
    const EvalReport& report, std::span<const DisaggResult> results,
    const std::filesystem::path& out_dir, std::span<const UtcDay> days);

}  // namespace flowdisagg
