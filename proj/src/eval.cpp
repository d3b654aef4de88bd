// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "flowdisagg/csv.hpp"
#include "flowdisagg/errors.hpp"
#include "flowdisagg/windows.hpp"

namespace flowdisagg {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) throw ShapeError("metric of empty input");
  if (a.size() != b.size()) throw ShapeError("metric inputs differ in length");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// 24 values of `series` (column 0) on `day`, or nullopt if any is missing.
std::optional<std::vector<double>> day_values(const TimeSeries& series,
                                              UtcDay day) {
  std::vector<double> out;
  out.reserve(kHoursPerDay);
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    const auto r = series.row_of(UtcTime{day} + std::chrono::hours{h});
    if (!r || is_missing(series.at(*r, 0))) return std::nullopt;
    out.push_back(series.at(*r, 0));
  }
  return out;
}

std::string fmt_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

TimeSeries linear_interpolate(const TimeSeries& daily) {
  if (daily.resolution() != Resolution::Daily || daily.cols() != 1) {
    throw ConfigError("linear_interpolate needs a single-column daily series");
  }
  std::vector<std::pair<long, double>> anchors;  // (hour index, value)
  for (std::size_t d = 0; d < daily.rows(); ++d) {
    if (!is_missing(daily.at(d, 0))) {
      anchors.emplace_back(static_cast<long>(d) * 24 + 12, daily.at(d, 0));
    }
  }
  if (anchors.empty()) throw DataError("linear_interpolate: all days missing");
  const std::size_t hours = daily.rows() * kHoursPerDay;
  Matrix out(hours, 1);
  std::size_t k = 0;
  for (std::size_t t = 0; t < hours; ++t) {
    const auto ti = static_cast<long>(t);
    while (k + 1 < anchors.size() && anchors[k + 1].first <= ti) ++k;
    if (ti <= anchors.front().first) {
      out(t, 0) = anchors.front().second;
    } else if (k + 1 >= anchors.size()) {
      out(t, 0) = anchors.back().second;
    } else {
      const auto [t0, v0] = anchors[k];
      const auto [t1, v1] = anchors[k + 1];
      const double frac =
          static_cast<double>(ti - t0) / static_cast<double>(t1 - t0);
      out(t, 0) = v0 + (v1 - v0) * frac;
    }
  }
  return TimeSeries(daily.start(), Resolution::Hourly, daily.names(),
                    daily.units(), std::move(out));
}

TimeSeries uniform_disaggregate(const TimeSeries& daily) {
  if (daily.resolution() != Resolution::Daily || daily.cols() != 1) {
    throw ConfigError("uniform_disaggregate needs a single-column daily series");
  }
  Matrix out(daily.rows() * kHoursPerDay, 1);
  for (std::size_t t = 0; t < out.rows(); ++t) {
    out(t, 0) = daily.at(t / kHoursPerDay, 0);
  }
  return TimeSeries(daily.start(), Resolution::Hourly, daily.names(),
                    daily.units(), std::move(out));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mean_preservation_error(std::span<const double> hourly,
                               double daily_avg) {
  if (hourly.empty()) throw ShapeError("mean_preservation_error of empty input");
  if (!std::isfinite(daily_avg) ||
      !std::all_of(hourly.begin(), hourly.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw DataError("mean_preservation_error: non-finite input");
  }
  return std::abs(mean_of(hourly) - daily_avg);
}

std::optional<double> variance_ratio(std::span<const double> pred,
                                     std::span<const double> truth) {
  check_pair(pred, truth);
  const double vt = variance_of(truth);
  if (vt == 0.0) return std::nullopt;
  return variance_of(pred) / vt;
}

const MethodSummary& EvalReport::method(const std::string& name) const {
  for (const auto& s : summary) {
    if (s.method == name) return s;
  }
  throw ConfigError("report has no method '" + name + "'");
}

EvalReport compare_methods(const std::map<std::string, TimeSeries>& methods,
                           const TimeSeries& truth, const TimeSeries& daily) {
  if (methods.empty()) throw ConfigError("compare_methods: no methods");
  if (daily.resolution() != Resolution::Daily || daily.cols() != 1) {
    throw ConfigError("compare_methods: daily series must be daily, 1 column");
  }
  EvalReport report;
  std::map<std::string, MethodSummary> acc;
  std::set<UtcDay> zero_var;
  for (std::size_t d = 0; d < daily.rows(); ++d) {
    if (is_missing(daily.at(d, 0))) continue;
    const UtcDay day = day_of(daily.time_at(d));
    const double avg = daily.at(d, 0);
    auto t = day_values(truth, day);
    if (!t) {
      throw DataError("truth does not cover " + format_day(day));
    }
    DaySeries ds;
    ds.daily_avg = avg;
    ds.truth = *t;
    for (const auto& [name, series] : methods) {
      auto p = day_values(series, day);
      if (!p) {
        throw DataError("method '" + name + "' does not cover " +
                        format_day(day));
      }
      DayMetrics row;
      row.day = day;
      row.method = name;
      row.mae = mae(*p, *t);
      row.rmse = rmse(*p, *t);
      row.mean_preservation_error = mean_preservation_error(*p, avg);
      row.variance_ratio = variance_ratio(*p, *t);
      if (!row.variance_ratio) zero_var.insert(day);

      auto& s = acc[name];
      s.method = name;
      s.days += 1;
      s.mae += row.mae;
      s.rmse += row.rmse;
      s.mean_preservation_error += row.mean_preservation_error;
      if (row.variance_ratio) {
        s.variance_ratio = s.variance_ratio.value_or(0.0) + *row.variance_ratio;
        s.variance_days += 1;
      }
      s.negative_predictions += static_cast<std::size_t>(
          std::count_if(p->begin(), p->end(), [](double v) { return v < 0.0; }));
      ds.methods.emplace(name, std::move(*p));
      report.rows.push_back(std::move(row));
    }
    report.series.emplace(day, std::move(ds));
  }
  for (auto& [name, s] : acc) {
    const double n = static_cast<double>(s.days);
    s.mae /= n;
    s.rmse /= n;
    s.mean_preservation_error /= n;
    if (s.variance_ratio) {
      *s.variance_ratio /= static_cast<double>(s.variance_days);
    }
    report.summary.push_back(s);
  }
  report.zero_variance_days = zero_var.size();
  if (!zero_var.empty()) {
    report.notes.push_back(std::to_string(zero_var.size()) +
                           " days with constant truth: variance ratio skipped");
  }
  return report;
}

void write_report_csv(const EvalReport& report,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "day,method,mae,rmse,mean_preservation_error,variance_ratio\n";
  for (const auto& r : report.rows) {
    out << format_day(r.day) << ',' << r.method << ',' << format_number(r.mae)
        << ',' << format_number(r.rmse) << ','
        << format_number(r.mean_preservation_error) << ','
        << (r.variance_ratio ? format_number(*r.variance_ratio) : "") << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_summary_csv(const EvalReport& report,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,days,mae,rmse,mean_preservation_error,variance_ratio,"
         "variance_days,negative_predictions\n";
  for (const auto& s : report.summary) {
    out << s.method << ',' << s.days << ',' << format_number(s.mae) << ','
        << format_number(s.rmse) << ','
        << format_number(s.mean_preservation_error) << ','
        << (s.variance_ratio ? format_number(*s.variance_ratio) : "") << ','
        << s.variance_days << ',' << s.negative_predictions << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

struct Line {
  std::string label;
  std::string color;
  std::vector<double> values;
};

std::string render_svg(const std::string& title, const std::vector<Line>& lines) {
  constexpr double kWidth = 800, kHeight = 400;
  constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& l : lines) {
    for (double v : l.values) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto x_of = [&](std::size_t h) {
    return kLeft + pw * static_cast<double>(h) / 23.0;
  };
  auto y_of = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" "
       "height=\"400\" viewBox=\"0 0 800 400\">\n";
  s += "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt_fixed(kLeft, 1) +
       "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" + title +
       "</text>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fmt_fixed(kLeft, 1) + "\" y1=\"" +
       fmt_fixed(kTop + ph, 1) + "\" x2=\"" + fmt_fixed(kLeft + pw, 1) +
       "\" y2=\"" + fmt_fixed(kTop + ph, 1) + "\"/>\n";
  s += "<line x1=\"" + fmt_fixed(kLeft, 1) + "\" y1=\"" + fmt_fixed(kTop, 1) +
       "\" x2=\"" + fmt_fixed(kLeft, 1) + "\" y2=\"" + fmt_fixed(kTop + ph, 1) +
       "\"/>\n</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t h = 0; h < 24; h += 6) {
    s += "<text x=\"" + fmt_fixed(x_of(h), 1) + "\" y=\"" +
         fmt_fixed(kTop + ph + 16, 1) + "\" text-anchor=\"middle\">" +
         std::to_string(h) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    s += "<text x=\"" + fmt_fixed(kLeft - 6, 1) + "\" y=\"" +
         fmt_fixed(y_of(v) + 4, 1) + "\" text-anchor=\"end\">" +
         fmt_fixed(v, 3) + "</text>\n";
  }
  s += "<text x=\"" + fmt_fixed(kLeft + pw / 2, 1) + "\" y=\"" +
       fmt_fixed(kHeight - 10, 1) +
       "\" text-anchor=\"middle\">hour (UTC)</text>\n";
  s += "<text x=\"16\" y=\"" + fmt_fixed(kTop + ph / 2, 1) +
       "\" transform=\"rotate(-90 16 " + fmt_fixed(kTop + ph / 2, 1) +
       ")\" text-anchor=\"middle\">flow (m3/s)</text>\n</g>\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    s += "<polyline fill=\"none\" stroke=\"" + l.color +
         "\" stroke-width=\"2\" points=\"";
    for (std::size_t h = 0; h < l.values.size(); ++h) {
      if (h) s += ' ';
      s += fmt_fixed(x_of(h), 2) + "," + fmt_fixed(y_of(l.values[h]), 2);
    }
    s += "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(i);
    s += "<line x1=\"" + fmt_fixed(kLeft + pw + 12, 1) + "\" y1=\"" +
         fmt_fixed(ly, 1) + "\" x2=\"" + fmt_fixed(kLeft + pw + 32, 1) +
         "\" y2=\"" + fmt_fixed(ly, 1) + "\" stroke=\"" + l.color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt_fixed(kLeft + pw + 38, 1) + "\" y=\"" +
         fmt_fixed(ly + 4, 1) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + l.label +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

std::vector<std::filesystem::path> emit_figure_data(
    const EvalReport& report, std::span<const DisaggResult> results,
    const std::filesystem::path& out_dir, std::span<const UtcDay> days) {
  if (report.rows.empty()) throw ConfigError("emit_figure_data: empty report");
  if (days.empty()) throw ConfigError("emit_figure_data: no days selected");

  struct Prepared {
    UtcDay day;
    std::vector<Line> lines;
  };
  std::vector<Prepared> prepared;
  for (const UtcDay day : days) {
    const auto it = report.series.find(day);
    if (it == report.series.end()) {
      throw ConfigError("day " + format_day(day) + " is not in the report");
    }
    const auto res = std::find_if(results.begin(), results.end(),
                                  [&](const auto& r) { return r.day == day; });
    if (res == results.end()) {
      throw ConfigError("no disaggregation result for " + format_day(day));
    }
    const auto interp = it->second.methods.find("linear_interpolation");
    if (interp == it->second.methods.end()) {
      throw ConfigError("report has no linear_interpolation series");
    }
    prepared.push_back(
        {day,
         {{"truth", "#000000", it->second.truth},
          {"model_raw", "#9e9e9e", res->hourly_flow_raw},
          {"model_corrected", "#d62728", res->hourly_flow_corrected},
          {"interpolation", "#1f77b4", interp->second}}});
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }
  std::vector<std::filesystem::path> written;
  for (const auto& p : prepared) {
    const std::string stem = "day_" + format_day(p.day);
    const auto csv = out_dir / (stem + ".csv");
    {
      std::ofstream out(csv, std::ios::binary);
      if (!out) throw IoError("cannot write " + csv.string());
      out << "hour,truth,model_raw,model_corrected,interpolation\n";
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        out << h;
        for (const auto& l : p.lines) out << ',' << format_number(l.values[h]);
        out << '\n';
      }
      if (!out) throw IoError("write failed for " + csv.string());
    }
    const auto svg = out_dir / (stem + ".svg");
    {
      std::ofstream out(svg, std::ios::binary);
      if (!out) throw IoError("cannot write " + svg.string());
      out << render_svg("Disaggregated flow " + format_day(p.day), p.lines);
      if (!out) throw IoError("write failed for " + svg.string());
    }
    written.push_back(csv);
    written.push_back(svg);
  }
  return written;
}

}  // namespace flowdisagg
