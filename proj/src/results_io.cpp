// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/results_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "flowdisagg/csv.hpp"
#include "flowdisagg/errors.hpp"

namespace flowdisagg {

void write_results_csv(std::span<const DisaggResult> results,
                       std::ostream& out) {
  const bool with_truth =
      !results.empty() && std::all_of(results.begin(), results.end(),
                                      [](const auto& r) { return r.truth; });
  out << "day,hour,raw,corrected,observed_daily_avg";
  if (with_truth) out << ",truth";
  out << '\n';
  for (const auto& r : results) {
    const std::string day = format_day(r.day);
    for (std::size_t h = 0; h < r.hourly_flow_raw.size(); ++h) {
      out << day << ',' << h << ',' << format_number(r.hourly_flow_raw[h])
          << ',' << format_number(r.hourly_flow_corrected[h]) << ','
          << format_number(r.daily_avg_observed);
      if (with_truth) out << ',' << format_number((*r.truth)[h]);
      out << '\n';
    }
  }
}

void write_results_csv(std::span<const DisaggResult> results,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_results_csv(results, out);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<DisaggResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool with_truth = false;
  if (line == "day,hour,raw,corrected,observed_daily_avg,truth") {
    with_truth = true;
  } else if (line != "day,hour,raw,corrected,observed_daily_avg") {
    throw ParseError("unexpected results header", path.string() + ":1");
  }

  auto number = [&](const std::string& cell, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
      throw ParseError("bad number '" + cell + "'", where);
    }
    return v;
  };

  std::vector<DisaggResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != (with_truth ? 6u : 5u)) {
      throw ParseError("wrong number of cells", where);
    }
    const UtcDay day = parse_day(cells[0]);
    const auto hour = static_cast<std::size_t>(number(cells[1], where));
    if (out.empty() || out.back().day != day) {
      if (hour != 0) throw ParseError("day does not start at hour 0", where);
      DisaggResult r;
      r.day = day;
      r.daily_avg_observed = number(cells[4], where);
      if (with_truth) r.truth.emplace();
      out.push_back(std::move(r));
    }
    auto& r = out.back();
    if (hour != r.hourly_flow_raw.size()) {
      throw ParseError("hours out of order", where);
    }
    r.hourly_flow_raw.push_back(number(cells[2], where));
    r.hourly_flow_corrected.push_back(number(cells[3], where));
    if (with_truth) r.truth->push_back(number(cells[5], where));
  }
  for (const auto& r : out) {
    if (r.hourly_flow_raw.size() != kHoursPerDay) {
      throw ParseError("day " + format_day(r.day) + " does not have 24 hours",
                       path.string());
    }
  }
  return out;
}

TimeSeries results_to_series(std::span<const DisaggResult> results,
                             bool corrected) {
  if (results.empty()) {
    return TimeSeries(UtcTime{}, Resolution::Hourly, {"flow"}, Matrix(0, 1));
  }
  const UtcDay first = results.front().day;
  const UtcDay last = results.back().day;
  if (last < first) throw DataError("results are not in day order");
  const auto n_days = static_cast<std::size_t>((last - first).count()) + 1;
  Matrix values(n_days * kHoursPerDay, 1, kMissing);
  for (const auto& r : results) {
    const auto d = static_cast<std::size_t>((r.day - first).count());
    const auto& src = corrected ? r.hourly_flow_corrected : r.hourly_flow_raw;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      values(d * kHoursPerDay + h, 0) = src[h];
    }
  }
  return TimeSeries(UtcTime{first}, Resolution::Hourly, {"flow"},
                    std::move(values));
}

}  // namespace flowdisagg
