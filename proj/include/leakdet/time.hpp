#pragma once

#include <leakdet/error.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace leakdet {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline std::int64_t day_of(Timestamp t) {
  return t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
}

inline std::string format_date(Timestamp t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_of(t)}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_iso8601(Timestamp t) {
  const std::int64_t secs = t - day_of(t) * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(t).c_str(), static_cast<int>(secs / 3600),
                static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

/// Accepts YYYY-MM-DD[THH:MM[:SS]][Z|+HH:MM|-HH:MM]; a space may replace 'T'.
inline Timestamp parse_iso8601(std::string_view text) {
  const std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, used = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &used) != 3 || used != 10)
    fail(ErrorCategory::parse, "bad timestamp '" + s + "'");
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    int n = 0;
    if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d%n", &h, &mi, &n) != 2 || n != 5)
      fail(ErrorCategory::parse, "bad timestamp '" + s + "'");
    pos += 1 + 5;
    if (pos < s.size() && s[pos] == ':') {
      if (std::sscanf(s.c_str() + pos + 1, "%2d%n", &sec, &n) != 1 || n != 2)
        fail(ErrorCategory::parse, "bad timestamp '" + s + "'");
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {  // fractional seconds are truncated
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      }
    }
  }
  int offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      ++pos;
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos == 6) {
      int oh = 0, om = 0;
      if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) fail(ErrorCategory::parse, "bad timestamp '" + s + "'");
      offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
      pos = s.size();
    } else {
      fail(ErrorCategory::parse, "bad timestamp '" + s + "'");
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) fail(ErrorCategory::parse, "bad timestamp '" + s + "'");
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since) * 86400 + h * 3600 + mi * 60 + sec - offset;
}

}  // namespace leakdet
