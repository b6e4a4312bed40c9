#include "sleepnet/timeutil.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "sleepnet/error.hpp"

namespace sleepnet {
namespace {

bool read_fixed(std::string_view text, std::size_t pos, std::size_t width,
                int& out) {
  if (pos + width > text.size()) return false;
  auto first = text.data() + pos;
  auto last = first + width;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

ClockTime ClockTime::parse(std::string_view text) {
  int h = 0, m = 0;
  if (text.size() != 5 || text[2] != ':' || !read_fixed(text, 0, 2, h) ||
      !read_fixed(text, 3, 2, m) || h > 23 || m > 59) {
    throw DomainError("invalid clock time '" + std::string(text) +
                      "', expected HH:MM");
  }
  return hm(h, m);
}

std::string ClockTime::str() const {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

std::optional<std::int64_t> parse_date(std::string_view text) {
  int y = 0, mo = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !read_fixed(text, 0, 4, y) || !read_fixed(text, 5, 2, mo) ||
      !read_fixed(text, 8, 2, d)) {
    return std::nullopt;
  }
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

std::string format_date(std::int64_t day_number) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day_number}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  auto date = parse_date(text.substr(0, 10));
  if (!date) return std::nullopt;
  if (text[10] != ' ' && text[10] != 'T') return std::nullopt;
  int h = 0, m = 0, s = 0;
  if (text[13] != ':' || !read_fixed(text, 11, 2, h) ||
      !read_fixed(text, 14, 2, m) || h > 23 || m > 59) {
    return std::nullopt;
  }
  if (text.size() == 19 &&
      (text[16] != ':' || !read_fixed(text, 17, 2, s) || s > 59)) {
    return std::nullopt;
  }
  return Timestamp{*date, h * 60 + m};
}

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day,
                                int hour, int minute) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                     std::chrono::day{day}};
  if (!ymd.ok()) throw DomainError("invalid civil date");
  return Timestamp{sys_days{ymd}.time_since_epoch().count(),
                   hour * 60 + minute};
}

std::string Timestamp::str() const {
  return format_date(day) + " " + ClockTime{minute}.str();
}

}  // namespace sleepnet
