#include "crix/index_engine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "crix/errors.hpp"

namespace crix {

KSchedule KSchedule::constant(Date from, std::size_t k) {
    KSchedule s;
    s.set(from, k);
    return s;
}

void KSchedule::set(Date effective_from, std::size_t k) {
    if (k == 0) {
        throw ConfigError("k must be positive");
    }
    entries_[effective_from] = k;
}

std::size_t KSchedule::k_for(Date composition_date) const {
    auto it = entries_.upper_bound(composition_date);
    if (it == entries_.begin()) {
        throw ConfigError(
            fmt::format("k schedule has no entry covering {}", format_date(composition_date)));
    }
    return std::prev(it)->second;
}

std::optional<std::size_t> IndexSeries::index_of(Date d) const {
    if (dates.empty() || d < dates.front() || d > dates.back()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>((d - dates.front()).count());
}

double IndexSeries::level_at(Date d) const {
    auto i = index_of(d);
    if (!i) {
        throw ArgumentError(fmt::format("series does not cover {}", format_date(d)));
    }
    return levels[*i];
}

const IndexState& IndexSeries::state_for(Date d) const {
    if (states.empty()) {
        throw ArgumentError("series has no states");
    }
    std::size_t idx = 0;
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (states[i].frozen_at < d) {
            idx = i;
        }
    }
    return states[idx];
}

std::vector<Date> IndexSeries::composition_dates() const {
    std::vector<Date> out;
    for (std::size_t i = 1; i < states.size(); ++i) {
        out.push_back(states[i].frozen_at);
    }
    return out;
}

Composition freeze_composition(const MarketPanel& panel, Date date,
                               const std::vector<std::string>& constituents,
                               const WeightScheme& scheme) {
    const std::size_t t = panel.date_index(date);
    Composition c;
    c.constituents = constituents;
    for (const auto& id : constituents) {
        const std::size_t a = panel.require_asset(id);
        if (panel.missing(t, a)) {
            throw DataError(fmt::format("constituent {} unpriced on composition date {}", id,
                                        format_date(date)));
        }
        const double q = panel.quantity(t, a);
        if (!(q > 0.0) || !std::isfinite(q)) {
            throw DegenerateCompositionError(fmt::format(
                "constituent {} has non-positive quantity on {}", id, format_date(date)));
        }
        double beta = 1.0;
        if (scheme.kind == WeightKind::liquidity) {
            double vol = 0.0;
            std::size_t used = 0;
            const std::size_t span = std::max(1u, scheme.volume_days);
            for (std::size_t back = 0; back < span && back <= t; ++back) {
                if (panel.present(t - back, a)) {
                    vol += panel.volume(t - back, a);
                    ++used;
                }
            }
            vol /= static_cast<double>(used);
            beta = vol / (panel.price(t, a) * q);
        }
        if (!std::isfinite(beta) || beta < 0.0) {
            throw DegenerateCompositionError(
                fmt::format("constituent {} has invalid adjustment factor", id));
        }
        c.quantities.push_back(q);
        c.betas.push_back(beta);
    }
    return c;
}

namespace {

double basket_sum(const MarketPanel& panel, const std::vector<std::string>& ids,
                  const std::vector<double>& quantities, const std::vector<double>& betas,
                  Date date) {
    const std::size_t t = panel.date_index(date);
    double sum = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t a = panel.require_asset(ids[i]);
        if (panel.missing(t, a)) {
            throw DataError(
                fmt::format("constituent {} unpriced on {}", ids[i], format_date(date)));
        }
        sum += betas[i] * panel.price(t, a) * quantities[i];
    }
    return sum;
}

}  // namespace

double basket_value(const MarketPanel& panel, const IndexState& state, Date date) {
    return basket_sum(panel, state.constituents, state.quantities, state.betas, date);
}

double basket_value(const MarketPanel& panel, const Composition& composition, Date date) {
    return basket_sum(panel, composition.constituents, composition.quantities, composition.betas,
                      date);
}

double initial_divisor(double basket, double starting_value) {
    if (!(basket > 0.0) || !(starting_value > 0.0)) {
        throw ArgumentError("basket value and starting value must be positive");
    }
    return basket / starting_value;
}

double index_level(const MarketPanel& panel, const IndexState& state, Date date) {
    return basket_value(panel, state, date) / state.divisor;
}

IndexState chain_divisor(const IndexState& old_state, const Composition& next,
                         const MarketPanel& panel, Date date) {
    const double old_level = index_level(panel, old_state, date);
    const double new_basket = basket_value(panel, next, date);
    if (!(new_basket > 0.0)) {
        throw DegenerateCompositionError(
            fmt::format("new basket on {} has non-positive value", format_date(date)));
    }
    return IndexState{date, next.constituents, next.quantities, next.betas,
                      new_basket / old_level};
}

namespace {

struct PricedState {
    IndexState state;
    std::vector<std::size_t> columns;
};

PricedState priced(const MarketPanel& panel, IndexState state) {
    PricedState p{std::move(state), {}};
    for (const auto& id : p.state.constituents) {
        p.columns.push_back(panel.require_asset(id));
    }
    return p;
}

double fast_level(const MarketPanel& panel, const PricedState& p, std::size_t t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.columns.size(); ++i) {
        const double price = panel.price(t, p.columns[i]);
        if (std::isnan(price)) {
            throw DataError(fmt::format("constituent {} unpriced on {}", p.state.constituents[i],
                                        format_date(panel.dates()[t])));
        }
        sum += p.state.betas[i] * price * p.state.quantities[i];
    }
    return sum / p.state.divisor;
}

std::vector<std::string> top_ids(const MarketPanel& raw, Date date, RankScheme ordering,
                                 std::size_t k) {
    std::vector<std::string> ids;
    for (std::size_t a : rank_assets(raw, date, ordering, k)) {
        ids.push_back(raw.assets()[a]);
    }
    if (ids.empty()) {
        throw ShortageError(0, 1, "ranking on " + format_date(date));
    }
    return ids;
}

}  // namespace

IndexSeries build_index_series(const MarketPanel& panel, RankScheme ordering,
                               const WeightScheme& weights, const KSchedule& k_schedule,
                               const RebalanceCalendar& calendar, Date start,
                               double starting_value, std::optional<Date> end) {
    const Date last = end.value_or(panel.last_date());
    if (!panel.covers(start) || !panel.covers(last) || last < start) {
        throw ArgumentError(fmt::format("series range {}..{} not covered by panel",
                                        format_date(start), format_date(last)));
    }
    if (!(starting_value > 0.0)) {
        throw ArgumentError("starting value must be positive");
    }
    calendar.validate();

    // Ranking looks at raw observations; pricing uses LOCF-repaired values.
    const auto [filled, mask] =
        apply_missing_policy(panel, {start, last}, MissingMode::computation);

    IndexSeries series;
    series.config = SeriesConfig{ordering, weights, starting_value, calendar};

    const auto first_ids = top_ids(panel, start, ordering, k_schedule.k_for(start));
    const Composition first = freeze_composition(filled, start, first_ids, weights);
    IndexState initial{start, first.constituents, first.quantities, first.betas,
                       initial_divisor(basket_value(filled, first, start), starting_value)};
    PricedState current = priced(filled, initial);
    series.states.push_back(current.state);

    const auto comps = calendar.composition_dates(start + std::chrono::days{1}, last);
    std::size_t next_comp = 0;
    const std::size_t t0 = filled.date_index(start);
    const std::size_t t1 = filled.date_index(last);
    for (std::size_t t = t0; t <= t1; ++t) {
        const Date d = filled.dates()[t];
        const double level = t == t0 ? starting_value : fast_level(filled, current, t);
        series.dates.push_back(d);
        series.levels.push_back(level);
        if (next_comp < comps.size() && comps[next_comp] == d) {
            ++next_comp;
            if (d == last) {
                continue;
            }
            const auto ids = top_ids(panel, d, ordering, k_schedule.k_for(d));
            const Composition next = freeze_composition(filled, d, ids, weights);
            const double new_basket = basket_value(filled, next, d);
            if (!(new_basket > 0.0)) {
                throw DegenerateCompositionError(
                    fmt::format("new basket on {} has non-positive value", format_date(d)));
            }
            IndexState state{d, next.constituents, next.quantities, next.betas,
                             new_basket / level};
            current = priced(filled, std::move(state));
            series.states.push_back(current.state);
        }
    }
    return series;
}

IndexSeries total_market_index(const MarketPanel& panel, const WeightScheme& weights,
                               const RebalanceCalendar& calendar, Date start,
                               double starting_value, std::optional<Date> end) {
    return build_index_series(panel, RankScheme::market_cap, weights,
                              KSchedule::constant(start, all_assets), calendar, start,
                              starting_value, end);
}

std::vector<double> log_returns(const std::vector<double>& levels) {
    if (levels.size() < 2) {
        throw ArgumentError("log returns need at least two levels");
    }
    std::vector<double> out;
    out.reserve(levels.size() - 1);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0)) {
            throw NumericError(fmt::format("non-positive level at position {}", i));
        }
        if (i > 0) {
            out.push_back(std::log(levels[i]) - std::log(levels[i - 1]));
        }
    }
    return out;
}

DatedValues log_returns(const IndexSeries& series) {
    DatedValues out;
    out.values = log_returns(series.levels);
    out.dates.assign(series.dates.begin() + 1, series.dates.end());
    return out;
}

}  // namespace crix
