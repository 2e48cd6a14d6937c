#include "urban3d/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "urban3d/error.hpp"

namespace urban3d {

using namespace std::chrono;

Timestamp make_utc(int year, unsigned month, unsigned day, int hour, int minute, int second) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw InputError("timestamp too short: '" + std::string(text) + "'");
  int v = 0;
  const char* first = text.data() + pos;
  auto res = std::from_chars(first, first + len, v);
  if (res.ec != std::errc() || res.ptr != first + len) {
    throw InputError("malformed timestamp: '" + std::string(text) + "'");
  }
  return v;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || (text[pos] != c && !(c == 'T' && (text[pos] == 't' || text[pos] == ' ')))) {
    throw InputError("malformed timestamp: '" + std::string(text) + "'");
  }
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  const int y = read_int(text, 0, 4);
  expect(text, 4, '-');
  const int mo = read_int(text, 5, 2);
  expect(text, 7, '-');
  const int d = read_int(text, 8, 2);
  expect(text, 10, 'T');
  const int h = read_int(text, 11, 2);
  expect(text, 13, ':');
  const int mi = read_int(text, 14, 2);
  expect(text, 16, ':');
  const int s = read_int(text, 17, 2);
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw InputError("timestamp out of range: '" + std::string(text) + "'");
  }
  Timestamp t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
  const std::string_view zone = text.substr(19);
  if (zone == "Z" || zone == "z") return t;
  if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    const int oh = read_int(zone, 1, 2);
    const int om = read_int(zone, 4, 2);
    const auto offset = hours{oh} + minutes{om};
    return zone[0] == '+' ? t - offset : t + offset;
  }
  throw InputError("timestamp lacks a UTC offset: '" + std::string(text) + "'");
}

std::string format_rfc3339(Timestamp t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

int day_of_year(Timestamp t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  return static_cast<int>((day - sys_days{ymd.year() / January / 1}).count()) + 1;
}

double utc_hours(Timestamp t) {
  const auto day = floor<days>(t);
  return static_cast<double>((t - day).count()) / 3600.0;
}

int year_of(Timestamp t) { return static_cast<int>(year_month_day{floor<days>(t)}.year()); }

bool is_leap_year(int y) { return std::chrono::year{y}.is_leap(); }

}  // namespace urban3d
