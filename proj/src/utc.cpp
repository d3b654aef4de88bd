// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/utc.hpp"

#include <charconv>
#include <cstdio>

#include "flowdisagg/errors.hpp"

namespace flowdisagg {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len,
             std::string_view whole) {
  if (pos + len > text.size()) {
    throw ParseError("truncated timestamp", std::string(whole));
  }
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw ParseError("bad digits in timestamp", std::string(whole));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c,
            std::string_view whole) {
  if (pos >= text.size() || text[pos] != c) {
    throw ParseError(std::string("expected '") + c + "' in timestamp",
                     std::string(whole));
  }
}

}  // namespace

UtcDay parse_day(std::string_view text) {
  using namespace std::chrono;
  if (text.size() < 10) throw ParseError("truncated date", std::string(text));
  const int y = read_int(text, 0, 4, text);
  expect(text, 4, '-', text);
  const int m = read_int(text, 5, 2, text);
  expect(text, 7, '-', text);
  const int d = read_int(text, 8, 2, text);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ParseError("invalid calendar date", std::string(text));
  return sys_days{ymd};
}

UtcTime parse_utc(std::string_view text) {
  using namespace std::chrono;
  const UtcDay day = parse_day(text);
  if (text.size() == 10) return UtcTime{day};

  std::size_t pos = 10;
  if (text[pos] != 'T' && text[pos] != ' ') {
    throw ParseError("expected 'T' after date", std::string(text));
  }
  const int hh = read_int(text, 11, 2, text);
  expect(text, 13, ':', text);
  const int mm = read_int(text, 14, 2, text);
  int ss = 0;
  pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = read_int(text, 17, 2, text);
    pos = 19;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        if (text[pos] != '0') {
          throw ParseError("sub-second timestamps are not supported",
                           std::string(text));
        }
        ++pos;
      }
    }
  }
  const std::string_view tail = text.substr(pos);
  if (!(tail.empty() || tail == "Z" || tail == "+00:00" || tail == "+0000")) {
    throw ParseError("timestamp is not UTC", std::string(text));
  }
  if (hh > 23 || mm > 59 || ss > 59) {
    throw ParseError("time of day out of range", std::string(text));
  }
  return UtcTime{day} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_day(UtcDay d) {
  using namespace std::chrono;
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_utc(UtcTime t) {
  using namespace std::chrono;
  const UtcDay d = day_of(t);
  const hh_mm_ss hms{t - UtcTime{d}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_day(d).c_str(),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace flowdisagg
