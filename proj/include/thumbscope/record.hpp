#pragma once

// One video's metadata and UTC timestamp helpers.

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace thumbscope {

using Timestamp = std::chrono::sys_seconds;

struct ThumbnailRecord {
  std::string image_id;
  std::string channel;
  std::string group;
  std::string event;
  Timestamp published_at{};
  long long views = 0;
  long long likes = 0;
  long long comments = 0;
  std::string thumbnail_path;
  std::string url;

  friend bool operator==(const ThumbnailRecord&, const ThumbnailRecord&) = default;
};

namespace detail {

inline bool read_digits(std::string_view s, std::size_t& pos, int n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (int i = 0; i < n; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  pos += n;
  return true;
}

inline bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) return false;
  ++pos;
  return true;
}

}  // namespace detail

// ISO-8601 date-time: YYYY-MM-DD[T ]HH:MM:SS[.frac](Z|+HH:MM|-HH:MM), or a
// bare date at midnight UTC. Fractional seconds are truncated.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  std::size_t p = 0;
  int y, mo, d, h = 0, mi = 0, sec = 0;
  if (!detail::read_digits(s, p, 4, y) || !detail::expect(s, p, '-') || !detail::read_digits(s, p, 2, mo) ||
      !detail::expect(s, p, '-') || !detail::read_digits(s, p, 2, d))
    return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  long offset = 0;
  if (p < s.size()) {
    if (s[p] != 'T' && s[p] != 't' && s[p] != ' ') return std::nullopt;
    ++p;
    if (!detail::read_digits(s, p, 2, h) || !detail::expect(s, p, ':') || !detail::read_digits(s, p, 2, mi) ||
        !detail::expect(s, p, ':') || !detail::read_digits(s, p, 2, sec))
      return std::nullopt;
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
    if (p < s.size() && s[p] == '.') {
      ++p;
      const std::size_t start = p;
      while (p < s.size() && s[p] >= '0' && s[p] <= '9') ++p;
      if (p == start) return std::nullopt;
    }
    if (p >= s.size()) return std::nullopt;
    if (s[p] == 'Z' || s[p] == 'z') {
      ++p;
    } else if (s[p] == '+' || s[p] == '-') {
      const int sign = s[p] == '+' ? 1 : -1;
      ++p;
      int oh, om;
      if (!detail::read_digits(s, p, 2, oh) || !detail::expect(s, p, ':') || !detail::read_digits(s, p, 2, om))
        return std::nullopt;
      if (oh > 23 || om > 59) return std::nullopt;
      offset = sign * (oh * 3600L + om * 60L);
    } else {
      return std::nullopt;
    }
    if (p != s.size()) return std::nullopt;
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} - seconds{offset};
}

// Canonical form: YYYY-MM-DDTHH:MM:SSZ.
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

// "YYYY-MM" of the UTC calendar month.
inline std::string format_month(Timestamp t) { return format_timestamp(t).substr(0, 7); }

}  // namespace thumbscope
