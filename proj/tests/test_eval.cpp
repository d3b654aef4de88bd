// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "flowdisagg/errors.hpp"
#include "flowdisagg/eval.hpp"
#include "support.hpp"

using namespace flowdisagg;
using fdtest::series;

namespace {

TimeSeries hourly_flow(const char* start, std::vector<double> v) {
  const std::size_t n = v.size();
  return series(start, Resolution::Hourly, {"flow"}, n, std::move(v));
}

TimeSeries daily_flow(const char* start, std::vector<double> v) {
  const std::size_t n = v.size();
  return series(start, Resolution::Daily, {"flow"}, n, std::move(v));
}

std::vector<double> hours_of(const TimeSeries& s, std::size_t day) {
  std::vector<double> out;
  for (std::size_t h = 0; h < 24; ++h) out.push_back(s.at(day * 24 + h, 0));
  return out;
}

}  // namespace

TEST(Metrics, HandValues) {
  const std::vector<double> p{1, 2, 3, 4}, t{2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(mae(p, t), 1.0);                      // (1+0+1+2)/4
  EXPECT_DOUBLE_EQ(rmse(p, t), std::sqrt(6.0 / 4.0));   // (1+0+1+4)/4
  EXPECT_DOUBLE_EQ(mean_preservation_error(p, 2.0), 0.5);
  EXPECT_FALSE(variance_ratio(p, t));
  EXPECT_DOUBLE_EQ(*variance_ratio(t, p), 0.0);
  EXPECT_DOUBLE_EQ(*variance_ratio(std::vector<double>{0, 2}, std::vector<double>{0, 1}), 4.0);
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_THROW(mae({}, {}), ShapeError);
  EXPECT_THROW(rmse(p, std::vector<double>{1.0}), ShapeError);
  EXPECT_THROW(mean_preservation_error(std::vector<double>{kMissing}, 1.0), DataError);
}

TEST(Baselines, UniformRepeatsDailyValue) {
  const auto u = uniform_disaggregate(daily_flow("2020-03-01", {1.0, kMissing, 3.0}));
  ASSERT_EQ(u.rows(), 72u);
  EXPECT_EQ(u.resolution(), Resolution::Hourly);
  for (std::size_t h = 0; h < 24; ++h) {
    EXPECT_EQ(u.at(h, 0), 1.0);
    EXPECT_TRUE(is_missing(u.at(24 + h, 0)));
    EXPECT_EQ(u.at(48 + h, 0), 3.0);
  }
}

TEST(Baselines, LinearInterpolationAnchors) {
  const auto s = linear_interpolate(daily_flow("2020-03-01", {0.0, 24.0, kMissing, 0.0}));
  ASSERT_EQ(s.rows(), 96u);
  for (std::size_t h = 0; h <= 12; ++h) EXPECT_EQ(s.at(h, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.at(13, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.at(36, 0), 24.0);
  // day 3 missing: straight line from hour 36 to hour 84
  EXPECT_DOUBLE_EQ(s.at(60, 0), 12.0);
  for (std::size_t h = 84; h < 96; ++h) EXPECT_EQ(s.at(h, 0), 0.0);
  EXPECT_THROW(linear_interpolate(daily_flow("2020-03-01", {kMissing})), DataError);
}

TEST(Compare, PerfectMethodScoresZero) {
  std::vector<double> truth(48);
  for (std::size_t i = 0; i < 48; ++i) truth[i] = 1.0 + static_cast<double>(i % 24);
  const auto t = hourly_flow("2020-05-01", truth);
  const auto d = daily_flow("2020-05-01", {12.5, 12.5});
  const auto r = compare_methods({{"self", t}, {"uniform", uniform_disaggregate(d)}}, t, d);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows[0].method, "self");
  EXPECT_EQ(r.rows[1].method, "uniform");
  EXPECT_EQ(r.rows[2].day, fdtest::day("2020-05-02"));
  const auto& self = r.method("self");
  EXPECT_EQ(self.days, 2u);
  EXPECT_EQ(self.mae, 0.0);
  EXPECT_EQ(self.rmse, 0.0);
  EXPECT_EQ(self.mean_preservation_error, 0.0);
  EXPECT_EQ(*self.variance_ratio, 1.0);
  const auto& uni = r.method("uniform");
  EXPECT_DOUBLE_EQ(uni.mae, 6.0);  // mean |k − 12.5|, k = 1..24
  EXPECT_EQ(*uni.variance_ratio, 0.0);
  EXPECT_EQ(uni.mean_preservation_error, 0.0);
  EXPECT_THROW(r.method("nope"), ConfigError);
  EXPECT_EQ(r.series.at(fdtest::day("2020-05-01")).truth, hours_of(t, 0));
}

TEST(Compare, ZeroVarianceTruthAndNegatives) {
  std::vector<double> pred(24, 2.0);
  pred[0] = -1.0;
  pred[1] = 5.0;
  const auto t = hourly_flow("2020-05-01", std::vector<double>(24, 2.0));
  const auto d = daily_flow("2020-05-01", {2.0});
  const auto r = compare_methods({{"m", hourly_flow("2020-05-01", pred)}}, t, d);
  EXPECT_EQ(r.zero_variance_days, 1u);
  EXPECT_FALSE(r.rows[0].variance_ratio);
  EXPECT_FALSE(r.method("m").variance_ratio);
  EXPECT_EQ(r.method("m").variance_days, 0u);
  EXPECT_EQ(r.method("m").negative_predictions, 1u);
}

TEST(Compare, MissingCoverageNamesDay) {
  const auto t = hourly_flow("2020-05-01", std::vector<double>(24, 1.0));
  const auto d = daily_flow("2020-05-01", {1.0, 1.0});
  try {
    compare_methods({{"m", t}}, t, d);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2020-05-02"), std::string::npos) << e.what();
  }
  // days without a daily value are skipped
  const auto r = compare_methods({{"m", t}}, t, daily_flow("2020-05-01", {1.0, kMissing}));
  EXPECT_EQ(r.rows.size(), 1u);
}

TEST(Reports, CsvAndFigures) {
  std::vector<double> truth(48);
  for (std::size_t i = 0; i < 48; ++i) truth[i] = std::sin(static_cast<double>(i)) + 3.0;
  const auto t = hourly_flow("2020-05-01", truth);
  const auto d = daily_flow("2020-05-01", {3.0, 3.0});
  const auto r = compare_methods(
      {{"model", t}, {"linear_interpolation", linear_interpolate(d)}}, t, d);

  fdtest::TempDir dir;
  write_report_csv(r, dir / "report.csv");
  write_summary_csv(r, dir / "summary.csv");
  const auto report = fdtest::slurp(dir / "report.csv");
  EXPECT_EQ(report.rfind("day,method,mae,rmse,mean_preservation_error,variance_ratio\n", 0), 0u);
  EXPECT_NE(report.find("2020-05-02,model,0,0,"), std::string::npos) << report;
  EXPECT_EQ(fdtest::slurp(dir / "summary.csv")
                .rfind("method,days,mae,rmse,mean_preservation_error,variance_ratio,"
                       "variance_days,negative_predictions\n", 0),
            0u);

  std::vector<DisaggResult> results(2);
  for (std::size_t k = 0; k < 2; ++k) {
    results[k].day = fdtest::day(k ? "2020-05-02" : "2020-05-01");
    results[k].hourly_flow_raw = hours_of(t, k);
    results[k].hourly_flow_corrected = hours_of(t, k);
    results[k].daily_avg_observed = 3.0;
  }
  const std::vector<UtcDay> pick{fdtest::day("2020-05-02")};
  const auto files = emit_figure_data(r, results, dir / "fig", pick);
  ASSERT_EQ(files.size(), 2u);
  const auto csv = fdtest::slurp(dir / "fig" / "day_2020-05-02.csv");
  EXPECT_EQ(csv.rfind("hour,truth,model_raw,model_corrected,interpolation\n", 0), 0u);
  const auto svg = fdtest::slurp(dir / "fig" / "day_2020-05-02.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  fdtest::TempDir again;
  emit_figure_data(r, results, again / "fig", pick);
  EXPECT_EQ(fdtest::slurp(again / "fig" / "day_2020-05-02.svg"), svg);

  EXPECT_THROW(emit_figure_data(r, results, dir / "none", {}), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(dir / "none"));
  EXPECT_THROW(emit_figure_data(EvalReport{}, results, dir / "none", pick), ConfigError);
}
