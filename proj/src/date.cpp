#include "crix/date.hpp"

#include <charconv>

#include <fmt/format.h>

#include "crix/errors.hpp"

namespace crix {

using namespace std::chrono;

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ArgumentError(fmt::format("malformed date '{}'", text));
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ArgumentError(fmt::format("malformed date '{}'", text));
    }
    const year_month_day ymd{year{parse_field(text, 0, 4)},
                             month{static_cast<unsigned>(parse_field(text, 5, 2))},
                             day{static_cast<unsigned>(parse_field(text, 8, 2))}};
    if (!ymd.ok()) {
        throw ArgumentError(fmt::format("invalid calendar date '{}'", text));
    }
    return sys_days{ymd};
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

Date last_day_of_month(Date d) {
    const year_month_day ymd{d};
    return sys_days{ymd.year() / ymd.month() / last};
}

bool is_last_day_of_month(Date d) { return last_day_of_month(d) == d; }

Date first_day_of_month(Date d) {
    const year_month_day ymd{d};
    return sys_days{ymd.year() / ymd.month() / 1};
}

Date add_months(Date d, int months) {
    const year_month_day ymd{d};
    const year_month shifted = ymd.year() / ymd.month() + std::chrono::months{months};
    const year_month_day_last end{shifted.year() / shifted.month() / last};
    const day dd = ymd.day() > end.day() ? end.day() : ymd.day();
    return sys_days{shifted.year() / shifted.month() / dd};
}

Date nth_weekday_of_month(Date d, unsigned n, weekday wd) {
    const year_month_day ymd{d};
    const year_month_weekday target{ymd.year() / ymd.month() / wd[n]};
    if (!target.ok()) {
        throw ArgumentError(fmt::format("no weekday #{} in month of {}", n, format_date(d)));
    }
    return sys_days{target};
}

}  // namespace crix
