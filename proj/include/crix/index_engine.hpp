// Adjusted Laspeyres index with divisor chaining.
//
//   level_t = sum_i beta_i * P_{i,t} * Q_i / divisor
//
// Q_i and beta_i are frozen on a composition date and held until the next
// one. The divisor is re-solved on every composition date so that the level
// at that date's close is the same under the outgoing and incoming baskets;
// the incoming basket prices every later day.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crix/calendar.hpp"
#include "crix/date.hpp"
#include "crix/market_data.hpp"

namespace crix {

enum class WeightKind { market_cap, liquidity };

struct WeightScheme {
    WeightKind kind = WeightKind::market_cap;
    /// Liquidity beta averages volume over this many trailing days (1 = the
    /// composition day only).
    unsigned volume_days = 1;
};

/// Constituents with frozen quantities and adjustment factors.
struct Composition {
    std::vector<std::string> constituents;
    std::vector<double> quantities;
    std::vector<double> betas;
};

struct IndexState {
    Date frozen_at;  // t_l^-: the composition date the basket was frozen on
    std::vector<std::string> constituents;
    std::vector<double> quantities;
    std::vector<double> betas;
    double divisor = 1.0;

    std::size_t size() const noexcept { return constituents.size(); }
};

/// Number of constituents per review period, keyed by the first composition
/// date the value applies to. `all_assets` means the whole rankable universe.
class KSchedule {
public:
    KSchedule() = default;
    static KSchedule constant(Date from, std::size_t k);

    void set(Date effective_from, std::size_t k);
    /// k in force on `composition_date`; ConfigError when no entry covers it.
    std::size_t k_for(Date composition_date) const;
    const std::map<Date, std::size_t>& entries() const noexcept { return entries_; }

private:
    std::map<Date, std::size_t> entries_;
};

struct SeriesConfig {
    RankScheme ordering = RankScheme::market_cap;
    WeightScheme weights;
    double starting_value = 1000.0;
    RebalanceCalendar calendar;
};

struct IndexSeries {
    std::vector<Date> dates;
    std::vector<double> levels;
    std::vector<IndexState> states;  // ascending frozen_at
    SeriesConfig config;

    std::size_t size() const noexcept { return dates.size(); }
    std::optional<std::size_t> index_of(Date d) const;
    double level_at(Date d) const;
    /// State pricing `d`: the latest state frozen strictly before `d`, or the
    /// first state on the start date.
    const IndexState& state_for(Date d) const;
    /// Composition dates where a new state took over (excludes the start).
    std::vector<Date> composition_dates() const;
};

/// Q and beta of `constituents` frozen from `panel` on `date`.
Composition freeze_composition(const MarketPanel& panel, Date date,
                               const std::vector<std::string>& constituents,
                               const WeightScheme& scheme);

/// sum_i beta_i * P_{i,date} * Q_i. `panel` should already be LOCF-repaired.
double basket_value(const MarketPanel& panel, const IndexState& state, Date date);
double basket_value(const MarketPanel& panel, const Composition& composition, Date date);

double initial_divisor(double basket, double starting_value);

double index_level(const MarketPanel& panel, const IndexState& state, Date date);

/// New state for `next` whose level on `date` equals the old state's level there.
IndexState chain_divisor(const IndexState& old_state, const Composition& next,
                         const MarketPanel& panel, Date date);

/// Daily index over [start, end] (end defaults to the panel's last date).
/// At each composition date the top-k assets under `ordering`, ranked on that
/// date, form the next basket.
IndexSeries build_index_series(const MarketPanel& panel, RankScheme ordering,
                               const WeightScheme& weights, const KSchedule& k_schedule,
                               const RebalanceCalendar& calendar, Date start,
                               double starting_value = 1000.0,
                               std::optional<Date> end = std::nullopt);

/// Every priced asset each month: TMI for market-cap weights, LTMI for liquidity.
IndexSeries total_market_index(const MarketPanel& panel, const WeightScheme& weights,
                               const RebalanceCalendar& calendar, Date start,
                               double starting_value = 1000.0,
                               std::optional<Date> end = std::nullopt);

struct DatedValues {
    std::vector<Date> dates;
    std::vector<double> values;
};

/// log(level_t) - log(level_{t-1}), dated by t.
DatedValues log_returns(const IndexSeries& series);
std::vector<double> log_returns(const std::vector<double>& levels);

}  // namespace crix
