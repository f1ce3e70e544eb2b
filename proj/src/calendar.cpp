#include "crix/calendar.hpp"

#include <fmt/format.h>

#include "crix/errors.hpp"

namespace crix {

using namespace std::chrono;

void RebalanceCalendar::validate() const {
    if (month_step == 0 || month_step > 12) {
        throw ConfigError("calendar month_step must be in 1..12");
    }
    if (anchor_month == 0 || anchor_month > 12) {
        throw ConfigError("calendar anchor_month must be in 1..12");
    }
    if (review_every == 0) {
        throw ConfigError("calendar review_every must be positive");
    }
    if (derivation_months == 0) {
        throw ConfigError("calendar derivation window must be at least one month");
    }
    if (derivation_months < month_step * review_every) {
        throw ConfigError("derivation window shorter than one review period");
    }
    if (rule == CompositionRule::nth_weekday && (nth == 0 || nth > 4 || !weekday.ok())) {
        throw ConfigError("calendar nth weekday must be 1..4 with a valid weekday");
    }
}

Date RebalanceCalendar::rule_date_in_month(Date any_day) const {
    if (rule == CompositionRule::month_end) {
        return last_day_of_month(any_day);
    }
    return nth_weekday_of_month(any_day, nth, weekday);
}

bool RebalanceCalendar::is_composition_month(Date any_day) const {
    const unsigned m = static_cast<unsigned>(year_month_day{any_day}.month());
    return (m + 12 - anchor_month) % month_step == 0;
}

std::vector<Date> RebalanceCalendar::composition_dates(Date from, Date to) const {
    std::vector<Date> out;
    for (Date month = first_day_of_month(from); month <= to; month = add_months(month, 1)) {
        if (!is_composition_month(month)) {
            continue;
        }
        const Date d = rule_date_in_month(month);
        if (d >= from && d <= to) {
            out.push_back(d);
        }
    }
    return out;
}

DateRange RebalanceCalendar::derivation_window(Date review) const {
    const Date earlier =
        rule_date_in_month(add_months(first_day_of_month(review), -static_cast<int>(derivation_months)));
    return {earlier + days{1}, review};
}

std::vector<Date> RebalanceCalendar::review_dates(Date data_start, Date from, Date to) const {
    const auto comps = composition_dates(from, to);
    std::vector<Date> out;
    std::size_t first = comps.size();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (derivation_window(comps[i]).first >= data_start) {
            first = i;
            break;
        }
    }
    for (std::size_t i = first; i < comps.size(); i += review_every) {
        out.push_back(comps[i]);
    }
    return out;
}

}  // namespace crix
