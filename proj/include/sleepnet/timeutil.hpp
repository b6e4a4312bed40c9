#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sleepnet {

inline constexpr int kMinutesPerDay = 24 * 60;

// Wall-clock time of day at minute precision.
struct ClockTime {
  int minutes = 0;  // [0, 1440)

  static constexpr ClockTime hm(int h, int m) { return ClockTime{h * 60 + m}; }
  // Accepts "HH:MM". Throws DomainError on anything else.
  static ClockTime parse(std::string_view text);
  std::string str() const;

  auto operator<=>(const ClockTime&) const = default;
};

// Half-open [begin, end) interval within one day.
struct ClockInterval {
  ClockTime begin;
  ClockTime end;

  bool contains(int minute_of_day) const noexcept {
    return minute_of_day >= begin.minutes && minute_of_day < end.minutes;
  }
};

// Local calendar timestamp. `day` counts days since 1970-01-01.
struct Timestamp {
  std::int64_t day = 0;
  int minute = 0;

  // Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM" and an optional ":SS"
  // suffix (seconds are truncated). Returns nullopt for invalid dates.
  static std::optional<Timestamp> parse(std::string_view text);
  static Timestamp from_civil(int year, unsigned month, unsigned day,
                              int hour, int minute);
  std::string str() const;  // "YYYY-MM-DD HH:MM"

  std::int64_t total_minutes() const noexcept {
    return day * kMinutesPerDay + minute;
  }

  auto operator<=>(const Timestamp&) const = default;
};

// Parses "YYYY-MM-DD" into days since epoch.
std::optional<std::int64_t> parse_date(std::string_view text);
std::string format_date(std::int64_t day);

}  // namespace sleepnet
