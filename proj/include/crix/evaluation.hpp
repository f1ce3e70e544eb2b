// Tracking scores of an index against the total-market proxy: monthly mean
// squared level gap, monthly directional accuracy, and reference-asset
// weight shares per composition period.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "crix/index_engine.hpp"
#include "crix/market_data.hpp"

namespace crix {

/// Rescales `candidate` piecewise: from each anchor date up to the next one
/// the levels are multiplied by target(anchor) / candidate(anchor). The
/// series start acts as an extra anchor when it precedes the first date.
IndexSeries recalibrate(const IndexSeries& candidate, const IndexSeries& target,
                        const std::vector<Date>& dates);

/// Mean of (candidate_t - target_t)^2 over the days of `month`.
double monthly_mse(const IndexSeries& candidate, const IndexSeries& target, DateRange month);

/// Share of days in `month` on which the level changes of both series have
/// the same sign (sign 0 only matches sign 0). Every day needs a predecessor.
double monthly_mda(const IndexSeries& candidate, const IndexSeries& target, DateRange month);

/// Calendar months touched by [first, last], clipped to that range.
std::vector<DateRange> month_ranges(Date first, Date last);

struct MonthlyScore {
    Date month;  // first evaluated day
    double mse = 0.0;
    double mda = 0.0;
};

struct WeightShare {
    Date period;  // composition date the basket was frozen on
    std::size_t k = 0;
    double reference = 0.0;
    double remainder = 0.0;
};

/// Per composition period, the daily share of `reference_asset` in the
/// basket value averaged over the days that basket priced. `panel` is the
/// raw panel the series was built from. With `require_presence` an asset
/// that never enters the basket is an argument error.
std::vector<WeightShare> weight_report(const MarketPanel& panel, const IndexSeries& series,
                                       const std::string& reference_asset,
                                       bool require_presence = false);

struct EvaluationReport {
    std::vector<MonthlyScore> months;
    double mean_mse = 0.0;
    double mean_mda = 0.0;
    std::vector<WeightShare> weights;
};

/// Monthly scores over the candidate's range. The first day has no
/// predecessor and is left out. With `recalibrated` the candidate is first
/// rescaled on its composition dates.
EvaluationReport evaluate(const IndexSeries& candidate, const IndexSeries& target,
                          bool recalibrated = true);

void write_monthly_csv(const EvaluationReport& report, std::ostream& out);
std::string report_json(const EvaluationReport& report);

}  // namespace crix
