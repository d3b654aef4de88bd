// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowdisagg/matrix.hpp"
#include "flowdisagg/timeseries.hpp"

namespace flowdisagg {

inline constexpr double kDefaultStdFloor = 1e-8;

/// Per-feature z-score statistics. Standard deviation uses the population
/// (divide-by-N) convention and is clamped from below by `floor`.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<std::string> names, std::vector<double> mean,
         std::vector<double> stddev);

  /// Fits over the rows of `rows` (one column per feature), ignoring missing
  /// entries. Each feature needs at least two observations; a feature without
  /// any raises FitError naming it.
  static Scaler fit(std::vector<std::string> names, const Matrix& rows,
                    double floor = kDefaultStdFloor);

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& stddev() const noexcept { return std_; }
  std::size_t size() const noexcept { return names_.size(); }

  double apply(std::size_t feature, double x) const noexcept {
    return is_missing(x) ? x : (x - mean_[feature]) / std_[feature];
  }
  double invert(std::size_t feature, double z) const noexcept {
    return is_missing(z) ? z : z * std_[feature] + mean_[feature];
  }
  /// In-place over one row laid out in feature order.
  void apply_row(std::span<double> row) const noexcept;

  /// Throws ShapeError unless `names` equals the fitted feature order.
  void check_order(const std::vector<std::string>& names) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> mean_;
  std::vector<double> std_;
};

/// Fits on the rows where `row_mask` is true.
Scaler fit_scaler(const TimeSeries& series, std::span<const bool> row_mask,
                  double floor = kDefaultStdFloor);

TimeSeries apply_scaler(const Scaler& scaler, const TimeSeries& series);
TimeSeries invert_scaler(const Scaler& scaler, const TimeSeries& series);

}  // namespace flowdisagg
