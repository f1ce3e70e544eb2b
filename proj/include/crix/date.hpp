#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace crix {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws ArgumentError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

Date last_day_of_month(Date d);
bool is_last_day_of_month(Date d);

/// Same-rule date `months` months away (negative allowed), day clamped to month length.
Date add_months(Date d, int months);

/// n-th (1-based) given weekday of the month containing `d`.
Date nth_weekday_of_month(Date d, unsigned n, std::chrono::weekday wd);

/// First day of the month containing `d`.
Date first_day_of_month(Date d);

}  // namespace crix
