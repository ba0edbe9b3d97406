#include "evqoe/core/time.hpp"

#include <charconv>

#include <fmt/format.h>

namespace evqoe {

namespace {

using namespace std::chrono;

bool parse_uint(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (text[i] < '0' || text[i] > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && ptr == text.data() + pos + len;
}

std::optional<Date> parse_ymd(std::string_view text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_uint(text, 0, 4, y) || !parse_uint(text, 5, 2, m) || !parse_uint(text, 8, 2, d)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
        text[19] != 'Z') {
        return std::nullopt;
    }
    auto date = parse_ymd(text.substr(0, 10));
    if (!date) return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!parse_uint(text, 11, 2, hh) || !parse_uint(text, 14, 2, mm) ||
        !parse_uint(text, 17, 2, ss)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_timestamp(Timestamp ts) {
    const Date d = date_of(ts);
    const year_month_day ymd{d};
    const hh_mm_ss tod{ts - Timestamp{d}};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       tod.hours().count(), tod.minutes().count(), tod.seconds().count());
}

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10) return std::nullopt;
    return parse_ymd(text);
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

Date make_date(int y, unsigned m, unsigned d) {
    return sys_days{year_month_day{year{y}, month{m}, day{d}}};
}

int weekday_index(Date d) { return static_cast<int>(weekday{d}.iso_encoding()) - 1; }

int year_of(Date d) { return static_cast<int>(year_month_day{d}.year()); }

unsigned month_of(Date d) { return static_cast<unsigned>(year_month_day{d}.month()); }

unsigned day_of_month(Date d) { return static_cast<unsigned>(year_month_day{d}.day()); }

int day_of_year(Date d) {
    const Date jan1 = sys_days{year_month_day{year_month_day{d}.year(), January, day{1}}};
    return static_cast<int>((d - jan1).count()) + 1;
}

Date week_monday(Date d) { return d - days{weekday_index(d)}; }

int iso_week(Date d) {
    // The ISO week belongs to the year of its Thursday.
    const Date thursday = week_monday(d) + days{3};
    return (day_of_year(thursday) - 1) / 7 + 1;
}

}  // namespace evqoe
