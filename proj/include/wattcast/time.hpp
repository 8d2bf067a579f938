#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "wattcast/error.hpp"

namespace wattcast {

/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

namespace detail {

inline bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p)
    if (*p < '0' || *p > '9') return false;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace detail

/// Parses `YYYY-MM-DD[(T| )HH:MM[:SS]][Z]`. Throws ParseError otherwise.
inline Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  const auto bad = [&] { return ParseError("invalid timestamp '" + std::string(s) + "'"); };
  if (!detail::parse_fixed(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
      !detail::parse_fixed(s, 5, 2, mo) || !detail::parse_fixed(s, 8, 2, d))
    throw bad();
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':' ||
        !detail::parse_fixed(s, 11, 2, h) || !detail::parse_fixed(s, 14, 2, mi))
      throw bad();
    if (s.size() > 16) {
      if (s.size() != 19 || s[16] != ':' || !detail::parse_fixed(s, 17, 2, sec)) throw bad();
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) throw bad();
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(hms.hours().count()), static_cast<long long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

}  // namespace wattcast
