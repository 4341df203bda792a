// Copyright 2026 The Slugwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SLUGWATCH_TIME_HPP_
#define SLUGWATCH_TIME_HPP_

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace slugwatch {

/// Absolute time as whole minutes since 1970-01-01T00:00Z. Integer minutes
/// keep interval containment and step arithmetic exact.
using Minutes = std::int64_t;

namespace detail {

inline std::optional<int> parse_fixed(std::string_view s, std::size_t pos,
                                      std::size_t len) {
  if (pos + len > s.size()) return std::nullopt;
  int value = 0;
  auto first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) return std::nullopt;
  return value;
}

}  // namespace detail

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace 'T') or a bare
/// integer minute count. Seconds must be zero.
inline std::optional<Minutes> parse_timestamp(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.empty()) return std::nullopt;

  if (s.find('-', 1) == std::string_view::npos) {
    Minutes value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
  }

  if (s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 16 && s.size() != 19) return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
    return std::nullopt;
  auto y = detail::parse_fixed(s, 0, 4);
  auto mo = detail::parse_fixed(s, 5, 2);
  auto d = detail::parse_fixed(s, 8, 2);
  auto h = detail::parse_fixed(s, 11, 2);
  auto mi = detail::parse_fixed(s, 14, 2);
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  if (s.size() == 19) {
    if (s[16] != ':') return std::nullopt;
    auto sec = detail::parse_fixed(s, 17, 2);
    if (!sec || *sec != 0) return std::nullopt;
  }
  if (*h > 23 || *mi > 59) return std::nullopt;

  using namespace std::chrono;
  year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                     day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  const Minutes days = sys_days{ymd}.time_since_epoch().count();
  return days * 1440 + *h * 60 + *mi;
}

/// Formats as "YYYY-MM-DDTHH:MM".
inline std::string format_timestamp(Minutes t) {
  using namespace std::chrono;
  Minutes days = t / 1440;
  Minutes rem = t % 1440;
  if (rem < 0) {
    rem += 1440;
    days -= 1;
  }
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace slugwatch

#endif  // SLUGWATCH_TIME_HPP_
