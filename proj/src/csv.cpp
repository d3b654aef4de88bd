// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string format_number(double v) {
  if (is_missing(v)) return {};
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv(const TimeSeries& series, std::ostream& out) {
  out << "timestamp_utc";
  for (const auto& n : series.names()) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < series.rows(); ++r) {
    out << format_utc(series.time_at(r));
    for (std::size_t c = 0; c < series.cols(); ++c) {
      out << ',' << format_number(series.at(r, c));
    }
    out << '\n';
  }
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(series, out);
  if (!out) throw IoError("write failed for " + path.string());
}

TimeSeries read_csv(std::istream& in, Resolution resolution,
                    const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV", source + ":1");
  strip_cr(line);
  auto header = split(line);
  if (header.empty() || header[0] != "timestamp_utc") {
    throw ParseError("header must start with timestamp_utc", source + ":1");
  }
  std::vector<std::string> names(header.begin() + 1, header.end());
  const std::size_t cols = names.size();
  const auto step = step_of(resolution);

  std::vector<double> data;
  UtcTime start{};
  UtcTime prev{};
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != cols + 1) {
      throw ParseError("expected " + std::to_string(cols + 1) + " cells, got " +
                           std::to_string(cells.size()),
                       where);
    }
    const UtcTime t = parse_utc(cells[0]);
    if (rows == 0) {
      if ((t - UtcTime{day_of(t)}) % step != std::chrono::seconds{0}) {
        throw ParseError("first timestamp not aligned to resolution", where);
      }
      start = t;
    } else {
      if (t <= prev) throw ParseError("timestamps not increasing", where);
      if ((t - prev) % step != std::chrono::seconds{0}) {
        throw ParseError("timestamp not aligned to resolution", where);
      }
      const auto gap = static_cast<std::size_t>((t - prev) / step) - 1;
      data.insert(data.end(), gap * cols, kMissing);
      rows += gap;
    }
    for (std::size_t c = 1; c <= cols; ++c) {
      const std::string& cell = cells[c];
      if (cell.empty()) {
        data.push_back(kMissing);
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError("bad number '" + cell + "'", where);
      }
      data.push_back(v);
    }
    prev = t;
    ++rows;
  }
  return TimeSeries(start, resolution, std::move(names),
                    Matrix(rows, cols, std::move(data)));
}

TimeSeries read_csv(const std::filesystem::path& path, Resolution resolution) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_csv(in, resolution, path.string());
}

}  // namespace flowdisagg
