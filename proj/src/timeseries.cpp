// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/timeseries.hpp"

#include <algorithm>
#include <set>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {

const char* to_string(Resolution r) noexcept {
  return r == Resolution::Hourly ? "hourly" : "daily";
}

std::chrono::seconds step_of(Resolution r) noexcept {
  return r == Resolution::Hourly ? std::chrono::seconds{3600}
                                 : std::chrono::seconds{86400};
}

std::string default_unit(const std::string& variable) {
  if (variable == "flow") return "m3/s";
  if (variable == "precipitation" || variable == "rain" ||
      variable == "snowfall") {
    return "mm";
  }
  if (variable == "temperature") return "degC";
  if (variable == "relative_humidity") return "%";
  return "";
}

TimeSeries::TimeSeries(UtcTime start, Resolution resolution,
                       std::vector<std::string> names,
                       std::vector<std::string> units, Matrix values)
    : start_(start),
      resolution_(resolution),
      names_(std::move(names)),
      units_(std::move(units)),
      values_(std::move(values)) {
  if (names_.size() != values_.cols()) {
    throw ShapeError("time series has " + std::to_string(names_.size()) +
                     " names but " + std::to_string(values_.cols()) +
                     " columns");
  }
  if (units_.size() != names_.size()) {
    throw ShapeError("time series units do not match variable count");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DataError("empty variable name");
    if (!seen.insert(n).second) {
      throw DataError("duplicate variable name '" + n + "'");
    }
  }
  const auto offset = start_.time_since_epoch() % step_of(resolution_);
  if (offset.count() != 0) {
    throw DataError("start " + format_utc(start_) + " is not aligned to " +
                    to_string(resolution_) + " steps");
  }
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (std::size_t c = 0; c < values_.cols(); ++c) {
      const double v = values_(r, c);
      if (!is_missing(v) && !std::isfinite(v)) {
        throw DataError("non-finite value in '" + names_[c] + "' at " +
                        format_utc(time_at(r)));
      }
    }
  }
}

TimeSeries::TimeSeries(UtcTime start, Resolution resolution,
                       std::vector<std::string> names, Matrix values)
    : TimeSeries(start, resolution, names,
                 [&] {
                   std::vector<std::string> u;
                   for (const auto& n : names) u.push_back(default_unit(n));
                   return u;
                 }(),
                 std::move(values)) {}

UtcTime TimeSeries::time_at(std::size_t row) const noexcept {
  return start_ + step_of(resolution_) * static_cast<long>(row);
}

UtcTime TimeSeries::last() const noexcept {
  return rows() == 0 ? start_ : time_at(rows() - 1);
}

std::optional<std::size_t> TimeSeries::row_of(UtcTime t) const noexcept {
  if (t < start_) return std::nullopt;
  const auto delta = t - start_;
  const auto step = step_of(resolution_);
  if (delta % step != std::chrono::seconds{0}) return std::nullopt;
  const auto idx = static_cast<std::size_t>(delta / step);
  if (idx >= rows()) return std::nullopt;
  return idx;
}

std::optional<std::size_t> TimeSeries::find_column(
    const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t TimeSeries::column(const std::string& name) const {
  if (auto c = find_column(name)) return *c;
  throw ConfigError("series has no variable '" + name + "'");
}

TimeSeries TimeSeries::slice_days(UtcDay first, UtcDay last) const {
  std::size_t begin = rows();
  std::size_t end = 0;
  for (std::size_t r = 0; r < rows(); ++r) {
    const UtcDay d = day_of(time_at(r));
    if (d >= first && d <= last) {
      begin = std::min(begin, r);
      end = r + 1;
    }
  }
  if (begin >= end) {
    UtcTime s = UtcTime{first};
    return TimeSeries(s, resolution_, names_, units_, Matrix(0, cols()));
  }
  Matrix out(end - begin, cols());
  std::copy(values_.data().begin() + static_cast<long>(begin * cols()),
            values_.data().begin() + static_cast<long>(end * cols()),
            out.data().begin());
  return TimeSeries(time_at(begin), resolution_, names_, units_,
                    std::move(out));
}

TimeSeries TimeSeries::select(const std::vector<std::string>& names) const {
  std::vector<std::size_t> cols_idx;
  std::vector<std::string> units;
  for (const auto& n : names) {
    cols_idx.push_back(column(n));
    units.push_back(units_[cols_idx.back()]);
  }
  Matrix out(rows(), names.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols_idx.size(); ++c) {
      out(r, c) = values_(r, cols_idx[c]);
    }
  }
  return TimeSeries(start_, resolution_, names, std::move(units),
                    std::move(out));
}

std::size_t TimeSeries::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      values_.data().begin(), values_.data().end(),
      [](double v) { return is_missing(v); }));
}

bool operator==(const TimeSeries& a, const TimeSeries& b) {
  if (a.start_ != b.start_ || a.resolution_ != b.resolution_ ||
      a.names_ != b.names_ || a.units_ != b.units_ ||
      a.values_.rows() != b.values_.rows() ||
      a.values_.cols() != b.values_.cols()) {
    return false;
  }
  const auto& x = a.values_.data();
  const auto& y = b.values_.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i]) != is_missing(y[i])) return false;
    if (!is_missing(x[i]) && x[i] != y[i]) return false;
  }
  return true;
}

AggregateRule default_rule(const std::string& variable) {
  if (variable == "precipitation" || variable == "rain" ||
      variable == "snowfall") {
    return AggregateRule::Sum;
  }
  return AggregateRule::Mean;
}

TimeSeries aggregate_hourly_to_daily(
    const TimeSeries& hourly,
    const std::map<std::string, AggregateRule>& rules) {
  if (hourly.resolution() != Resolution::Hourly) {
    throw ConfigError("aggregate_hourly_to_daily needs an hourly series");
  }
  for (const auto& [name, rule] : rules) {
    if (!hourly.find_column(name)) {
      throw ConfigError("aggregation rule for unknown variable '" + name +
                        "'");
    }
  }
  std::vector<AggregateRule> col_rules;
  for (const auto& name : hourly.names()) {
    const auto it = rules.find(name);
    if (it == rules.end()) {
      throw ConfigError("no aggregation rule for variable '" + name + "'");
    }
    col_rules.push_back(it->second);
  }

  const UtcDay first = day_of(hourly.start());
  if (hourly.empty()) {
    return TimeSeries(UtcTime{first}, Resolution::Daily, hourly.names(),
                      hourly.units(), Matrix(0, hourly.cols()));
  }
  const UtcDay last = day_of(hourly.last());
  const auto n_days = static_cast<std::size_t>((last - first).count()) + 1;
  Matrix out(n_days, hourly.cols(), kMissing);

  for (std::size_t d = 0; d < n_days; ++d) {
    const UtcTime day_start = UtcTime{first + std::chrono::days{d}};
    for (std::size_t c = 0; c < hourly.cols(); ++c) {
      double sum = 0.0;
      int present = 0;
      for (int h = 0; h < 24; ++h) {
        const auto r = hourly.row_of(day_start + std::chrono::hours{h});
        if (!r) break;
        const double v = hourly.at(*r, c);
        if (is_missing(v)) break;
        sum += v;
        ++present;
      }
      if (present == 24) {
        out(d, c) = col_rules[c] == AggregateRule::Sum ? sum : sum / 24.0;
      }
    }
  }
  return TimeSeries(UtcTime{first}, Resolution::Daily, hourly.names(),
                    hourly.units(), std::move(out));
}

TimeSeries aggregate_hourly_to_daily(const TimeSeries& hourly) {
  std::map<std::string, AggregateRule> rules;
  for (const auto& n : hourly.names()) rules.emplace(n, default_rule(n));
  return aggregate_hourly_to_daily(hourly, rules);
}

}  // namespace flowdisagg
