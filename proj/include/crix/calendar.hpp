#pragma once

#include <chrono>
#include <vector>

#include "crix/date.hpp"
#include "crix/market_data.hpp"

namespace crix {

enum class CompositionRule { month_end, nth_weekday };

/// Composition, review and derivation-window rules.
///
/// Composition dates fall in every `month_step`-th month counted from
/// `anchor_month`; within a month the date is either the last calendar day or
/// the n-th given weekday (e.g. third Friday). Every `review_every`-th
/// composition date is a review date, and the derivation window of a review
/// spans the `derivation_months` months ending on it.
struct RebalanceCalendar {
    CompositionRule rule = CompositionRule::month_end;
    unsigned nth = 3;
    std::chrono::weekday weekday = std::chrono::Friday;
    unsigned month_step = 1;
    unsigned anchor_month = 12;
    unsigned review_every = 3;
    unsigned derivation_months = 3;

    void validate() const;

    /// The rule's date within the month containing `any_day`.
    Date rule_date_in_month(Date any_day) const;
    bool is_composition_month(Date any_day) const;

    /// Composition dates in [from, to], ascending.
    std::vector<Date> composition_dates(Date from, Date to) const;

    /// Window ending on `review`: (rule date `derivation_months` earlier, review].
    DateRange derivation_window(Date review) const;

    /// Review dates in [from, to]: the first composition date whose derivation
    /// window starts on or after `data_start`, then every `review_every`-th
    /// composition date after it.
    std::vector<Date> review_dates(Date data_start, Date from, Date to) const;
};

}  // namespace crix
