// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flowdisagg/matrix.hpp"
#include "flowdisagg/timeseries.hpp"
#include "flowdisagg/utc.hpp"

namespace fdtest {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fd") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::string fixture(const std::string& name) {
  return slurp(fs::path(FLOWDISAGG_FIXTURES) / name);
}

inline flowdisagg::UtcDay day(const char* text) {
  return flowdisagg::parse_day(text);
}

inline flowdisagg::TimeSeries series(const char* start,
                                     flowdisagg::Resolution res,
                                     std::vector<std::string> names,
                                     std::size_t rows,
                                     std::vector<double> values) {
  const std::size_t cols = values.size() / rows;
  return flowdisagg::TimeSeries(
      flowdisagg::parse_utc(start), res, std::move(names),
      flowdisagg::Matrix(rows, cols, std::move(values)));
}

inline double rel_diff(double a, double b) {
  const double d = std::abs(a - b);
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? d : d / s;
}

}  // namespace fdtest
