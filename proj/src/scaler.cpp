// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/scaler.hpp"

#include <algorithm>
#include <cmath>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {

Scaler::Scaler(std::vector<std::string> names, std::vector<double> mean,
               std::vector<double> stddev)
    : names_(std::move(names)), mean_(std::move(mean)), std_(std::move(stddev)) {
  if (mean_.size() != names_.size() || std_.size() != names_.size()) {
    throw ShapeError("scaler statistics do not match feature count");
  }
  for (std::size_t i = 0; i < std_.size(); ++i) {
    if (!std::isfinite(mean_[i]) || !std::isfinite(std_[i]) || std_[i] <= 0.0) {
      throw DataError("invalid scaler statistics for '" + names_[i] + "'");
    }
  }
}

Scaler Scaler::fit(std::vector<std::string> names, const Matrix& rows,
                   double floor) {
  if (names.size() != rows.cols()) {
    throw ShapeError("scaler fit: name count does not match columns");
  }
  if (!(floor > 0.0)) throw ConfigError("scaler floor must be positive");
  std::vector<double> mean(names.size()), sd(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const double v = rows(r, c);
      if (is_missing(v)) continue;
      sum += v;
      ++n;
    }
    if (n == 0) {
      throw FitError("cannot fit scaler: feature '" + names[c] +
                     "' has no observations");
    }
    if (n < 2) {
      throw FitError("cannot fit scaler: feature '" + names[c] +
                     "' has fewer than 2 observations");
    }
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const double v = rows(r, c);
      if (is_missing(v)) continue;
      ss += (v - mu) * (v - mu);
    }
    mean[c] = mu;
    sd[c] = std::max(std::sqrt(ss / static_cast<double>(n)), floor);
  }
  return Scaler(std::move(names), std::move(mean), std::move(sd));
}

void Scaler::apply_row(std::span<double> row) const noexcept {
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = apply(i, row[i]);
}

void Scaler::check_order(const std::vector<std::string>& names) const {
  if (names != names_) {
    std::string got, want;
    for (const auto& n : names) got += (got.empty() ? "" : ",") + n;
    for (const auto& n : names_) want += (want.empty() ? "" : ",") + n;
    throw ShapeError("feature order mismatch: scaler fitted on [" + want +
                     "], got [" + got + "]");
  }
}

Scaler fit_scaler(const TimeSeries& series, std::span<const bool> row_mask,
                  double floor) {
  if (row_mask.size() != series.rows()) {
    throw ShapeError("row mask length does not match series rows");
  }
  const auto n = static_cast<std::size_t>(
      std::count(row_mask.begin(), row_mask.end(), true));
  Matrix picked(n, series.cols());
  std::size_t out = 0;
  for (std::size_t r = 0; r < series.rows(); ++r) {
    if (!row_mask[r]) continue;
    std::copy(series.row(r).begin(), series.row(r).end(),
              picked.row(out++).begin());
  }
  return Scaler::fit(series.names(), picked, floor);
}

namespace {

template <typename F>
TimeSeries transform(const Scaler& scaler, const TimeSeries& series, F f) {
  scaler.check_order(series.names());
  Matrix out = series.values();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = f(c, out(r, c));
  }
  return TimeSeries(series.start(), series.resolution(), series.names(),
                    series.units(), std::move(out));
}

}  // namespace

TimeSeries apply_scaler(const Scaler& scaler, const TimeSeries& series) {
  return transform(scaler, series, [&](std::size_t c, double x) {
    return scaler.apply(c, x);
  });
}

TimeSeries invert_scaler(const Scaler& scaler, const TimeSeries& series) {
  return transform(scaler, series, [&](std::size_t c, double z) {
    return scaler.invert(c, z);
  });
}

}  // namespace flowdisagg
