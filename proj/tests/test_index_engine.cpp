#include <cmath>
#include <limits>

#include <doctest.h>

#include "crix/errors.hpp"
#include "crix/index_engine.hpp"
#include "fixtures.hpp"

using namespace crix;
using fixtures::day;

namespace {

const double nan_v = std::numeric_limits<double>::quiet_NaN();

MarketPanel one_day(const std::vector<std::pair<double, double>>& price_qty) {
    std::vector<std::vector<double>> prices;
    std::vector<double> q;
    for (const auto& [p, qq] : price_qty) {
        prices.push_back({p});
        q.push_back(qq);
    }
    return fixtures::panel_from_prices(prices, q);
}

IndexState state_of(const Composition& c, double divisor = 1.0) {
    return IndexState{day("2020-01-01"), c.constituents, c.quantities, c.betas, divisor};
}

// Straight transcription of the total-market rules on a panel without gaps:
// every asset with a positive cap, re-weighted on each month end, divisor
// re-solved at the month-end close.
std::vector<double> brute_force_tmi(const MarketPanel& p, double start_value) {
    const std::size_t n = p.n_assets();
    std::vector<double> q(n);
    auto freeze = [&](std::size_t t) {
        for (std::size_t a = 0; a < n; ++a) {
            q[a] = p.market_cap(t, a) / p.price(t, a);
        }
    };
    auto basket = [&](std::size_t t) {
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            s += p.price(t, a) * q[a];
        }
        return s;
    };
    freeze(0);
    double divisor = basket(0) / start_value;
    std::vector<double> levels;
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
        const double level = basket(t) / divisor;
        levels.push_back(level);
        if (t > 0 && t + 1 < p.n_dates() && is_last_day_of_month(p.dates()[t])) {
            freeze(t);
            divisor = basket(t) / level;
        }
    }
    levels[0] = start_value;
    return levels;
}

}  // namespace

TEST_CASE("basket value examples") {
    const auto p1 = one_day({{100, 10}});
    const auto c1 = freeze_composition(p1, p1.first_date(), {"X000"}, {});
    CHECK(basket_value(p1, c1, p1.first_date()) == doctest::Approx(1000.0).epsilon(1e-14));

    const auto p2 = one_day({{100, 10}, {50, 20}});
    const auto c2 = freeze_composition(p2, p2.first_date(), {"X000", "X001"}, {});
    CHECK(basket_value(p2, c2, p2.first_date()) == doctest::Approx(2000.0).epsilon(1e-14));
}

TEST_CASE("liquidity weights: beta = Vol / (P Q) and both forms agree") {
    MarketPanel p(day("2020-01-01"), 2, {"A"});
    p.set(0, 0, 100, 1000, 500);  // Q = 10, beta = 500 / 1000 = 0.5
    p.set(1, 0, 110, 1100, 1);
    const auto c = freeze_composition(p, day("2020-01-01"), {"A"},
                                      WeightScheme{WeightKind::liquidity, 1});
    CHECK(c.betas[0] == doctest::Approx(0.5).epsilon(1e-15));
    const double v = basket_value(p, c, day("2020-01-02"));
    CHECK(v == doctest::Approx(550.0).epsilon(1e-14));
    // Vol / P_{t_l^-} * P_t form of the same basket.
    CHECK(std::abs(v - 500.0 / 100.0 * 110.0) <= 1e-12 * v);
}

TEST_CASE("liquidity weights with a trailing volume average") {
    MarketPanel p(day("2020-01-01"), 3, {"A"});
    p.set(0, 0, 10, 100, 30);
    p.set(1, 0, 10, 100, 0);
    p.set(2, 0, 10, 100, 60);
    const auto c = freeze_composition(p, day("2020-01-03"), {"A"},
                                      WeightScheme{WeightKind::liquidity, 3});
    CHECK(c.betas[0] == doctest::Approx(0.3));
}

TEST_CASE("freeze_composition errors") {
    MarketPanel p(day("2020-01-01"), 1, {"A", "B", "C"});
    p.set(0, 0, 1, 10, 1);
    p.set(0, 2, 1, 0, 1);
    CHECK_THROWS_AS(freeze_composition(p, day("2020-01-01"), {"B"}, {}), DataError);
    CHECK_THROWS_AS(freeze_composition(p, day("2020-01-01"), {"C"}, {}),
                    DegenerateCompositionError);
    CHECK_THROWS_AS(freeze_composition(p, day("2020-01-01"), {"Z"}, {}), ArgumentError);
}

TEST_CASE("initial divisor") {
    CHECK(initial_divisor(1000, 1000) == 1.0);
    CHECK(initial_divisor(3000, 1000) == 3.0);
    CHECK(initial_divisor(12345.6, 100) == doctest::Approx(123.456).epsilon(1e-14));
    CHECK_THROWS_AS(initial_divisor(0, 1000), ArgumentError);
    CHECK_THROWS_AS(initial_divisor(10, -1), ArgumentError);
}

TEST_CASE("chain_divisor examples") {
    // old level 1200 (basket 1200, divisor 1), new basket 3600 -> divisor 3
    const auto p = one_day({{120, 10}, {160, 15}});
    const auto old_c = freeze_composition(p, p.first_date(), {"X000"}, {});
    const auto new_c = freeze_composition(p, p.first_date(), {"X000", "X001"}, {});
    const IndexState old_state = state_of(old_c, 1.0);
    const auto next = chain_divisor(old_state, new_c, p, p.first_date());
    CHECK(next.divisor == doctest::Approx(3.0).epsilon(1e-15));

    // identical composition keeps the divisor
    const IndexState s = state_of(new_c, 2.5);
    CHECK(chain_divisor(s, new_c, p, p.first_date()).divisor ==
          doctest::Approx(2.5).epsilon(1e-15));

    // old level 1000, new basket 250 -> divisor 0.25, level continuous
    const auto q = one_day({{100, 10}, {25, 10}});
    const IndexState o = state_of(freeze_composition(q, q.first_date(), {"X000"}, {}), 1.0);
    const auto nc = freeze_composition(q, q.first_date(), {"X001"}, {});
    const auto ns = chain_divisor(o, nc, q, q.first_date());
    CHECK(ns.divisor == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(index_level(q, ns, q.first_date()) == doctest::Approx(1000.0).epsilon(1e-14));
}

TEST_CASE("single asset doubling ends at twice the starting value") {
    std::vector<double> path(90);
    for (std::size_t t = 0; t < path.size(); ++t) {
        path[t] = std::pow(2.0, static_cast<double>(t) / 89.0) * 3.0;
    }
    const auto p = fixtures::panel_from_prices({path}, {7.0});
    const auto s = build_index_series(p, RankScheme::market_cap, {},
                                      KSchedule::constant(p.first_date(), 1), {}, p.first_date());
    CHECK(s.levels.front() == 1000.0);
    CHECK(s.levels.back() == doctest::Approx(2000.0).epsilon(1e-12));
    CHECK(s.size() == 90);
}

TEST_CASE("two equal caps, one gains 10 percent in a month") {
    const std::size_t days = 31;  // January 2020
    std::vector<double> a(days, 10.0), b(days, 10.0);
    for (std::size_t t = 0; t < days; ++t) {
        a[t] = 10.0 * (1.0 + 0.1 * static_cast<double>(t) / 30.0);
    }
    const auto p = fixtures::panel_from_prices({a, b}, {5.0, 5.0});
    const auto s = build_index_series(p, RankScheme::market_cap, {},
                                      KSchedule::constant(p.first_date(), 2), {}, p.first_date());
    CHECK(s.levels.back() == doctest::Approx(1.05 * s.levels.front()).epsilon(1e-12));
}

TEST_CASE("continuity across every changeover") {
    const auto p = fixtures::random_panel(12, 200, 77);
    KSchedule ks = KSchedule::constant(p.first_date(), 3);
    ks.set(day("2020-03-31"), 7);
    ks.set(day("2020-05-31"), 2);
    const auto s = build_index_series(p, RankScheme::market_cap, {}, ks, {}, p.first_date());
    const auto [filled, mask] =
        apply_missing_policy(p, {p.first_date(), p.last_date()}, MissingMode::computation);
    REQUIRE(s.states.size() == 7);  // start + Jan..Jun month ends
    for (std::size_t i = 1; i < s.states.size(); ++i) {
        const Date c = s.states[i].frozen_at;
        const double before = index_level(filled, s.states[i - 1], c);
        const double after = index_level(filled, s.states[i], c);
        CHECK(std::abs(after - before) <= 1e-9 * before);
        CHECK(s.level_at(c) == doctest::Approx(before).epsilon(1e-12));
    }
    CHECK(s.state_for(day("2020-03-31")).size() == 3);
    CHECK(s.state_for(day("2020-04-01")).size() == 7);
    CHECK(s.state_for(day("2020-06-05")).size() == 2);
}

TEST_CASE("within a frozen period the level is a fixed combination of prices") {
    const auto p = fixtures::random_panel(6, 60, 5);
    const auto s = build_index_series(p, RankScheme::market_cap, {},
                                      KSchedule::constant(p.first_date(), 4), {}, p.first_date());
    const IndexState& st = s.state_for(day("2020-02-10"));
    for (Date d = day("2020-02-01"); d <= day("2020-02-29"); d += std::chrono::days{1}) {
        double sum = 0.0;
        for (std::size_t i = 0; i < st.size(); ++i) {
            sum += st.quantities[i] * p.price(p.date_index(d), p.require_asset(st.constituents[i]));
        }
        CHECK(s.level_at(d) == doctest::Approx(sum / st.divisor).epsilon(1e-12));
    }
}

TEST_CASE("whole-universe build equals a brute-force total market index") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto p = fixtures::random_panel(5, 150, seed);
        const auto s = total_market_index(p, {}, {}, p.first_date());
        const auto oracle = brute_force_tmi(p, 1000.0);
        REQUIRE(s.levels.size() == oracle.size());
        for (std::size_t t = 0; t < oracle.size(); ++t) {
            CHECK(std::abs(s.levels[t] - oracle[t]) <= 1e-9 * oracle[t]);
        }
        const auto k_all = build_index_series(p, RankScheme::market_cap, {},
                                              KSchedule::constant(p.first_date(), 5), {},
                                              p.first_date());
        for (std::size_t t = 0; t < oracle.size(); ++t) {
            CHECK(std::abs(k_all.levels[t] - s.levels[t]) <= 1e-9 * s.levels[t]);
        }
    }
}

TEST_CASE("total market of one asset is its normalised price path") {
    const auto p = fixtures::random_panel(1, 70, 8);
    const auto s = total_market_index(p, {}, {}, p.first_date());
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
        CHECK(s.levels[t] == doctest::Approx(1000.0 * p.price(t, 0) / p.price(0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("identical returns: total market log returns equal the common return") {
    std::vector<double> r(40);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 0.02);
    for (auto& x : r) {
        x = n(rng);
    }
    std::vector<std::vector<double>> prices(3, std::vector<double>(41));
    const double p0[] = {1.0, 7.0, 40.0};
    for (std::size_t a = 0; a < 3; ++a) {
        double p = p0[a];
        for (std::size_t t = 0; t <= 40; ++t) {
            prices[a][t] = p;
            if (t < 40) {
                p *= std::exp(r[t]);
            }
        }
    }
    const auto panel = fixtures::panel_from_prices(prices, {3.0, 1.0, 0.2});
    const auto s = total_market_index(panel, {}, {}, panel.first_date());
    const auto lr = log_returns(s);
    for (std::size_t t = 0; t < 40; ++t) {
        CHECK(lr.values[t] == doctest::Approx(r[t]).epsilon(1e-10));
    }
}

TEST_CASE("scale invariance of log returns") {
    const auto p = fixtures::random_panel(6, 100, 12);
    MarketPanel scaled = p;
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
        for (std::size_t a = 0; a < p.n_assets(); ++a) {
            scaled.set(t, a, 3.5 * p.price(t, a), 3.5 * p.market_cap(t, a), p.volume(t, a));
        }
    }
    const auto ks = KSchedule::constant(p.first_date(), 3);
    const auto a = log_returns(build_index_series(p, RankScheme::market_cap, {}, ks, {},
                                                  p.first_date()));
    const auto b = log_returns(build_index_series(scaled, RankScheme::market_cap, {}, ks, {},
                                                  p.first_date()));
    for (std::size_t t = 0; t < a.values.size(); ++t) {
        CHECK(a.values[t] == doctest::Approx(b.values[t]).epsilon(1e-9));
    }
}

TEST_CASE("missing constituent prices are carried forward during computation") {
    const auto p = fixtures::panel_from_prices({{10, 11, nan_v, nan_v, 12}, {5, 5, 5, 5, 5}},
                                               {1.0, 1.0});
    const auto s = build_index_series(p, RankScheme::market_cap, {},
                                      KSchedule::constant(p.first_date(), 2), {}, p.first_date());
    CHECK(s.levels[2] == s.levels[1]);
    CHECK(s.levels[3] == s.levels[1]);
    CHECK(s.levels[4] > s.levels[3]);
}

TEST_CASE("shortage and schedule errors propagate") {
    const auto p = fixtures::random_panel(3, 40, 4);
    CHECK_THROWS_AS(build_index_series(p, RankScheme::market_cap, {},
                                       KSchedule::constant(p.first_date(), 4), {}, p.first_date()),
                    ShortageError);
    CHECK_THROWS_AS(build_index_series(p, RankScheme::market_cap, {},
                                       KSchedule::constant(day("2020-01-05"), 2), {},
                                       p.first_date()),
                    ConfigError);
    KSchedule ks;
    CHECK_THROWS_AS(ks.set(p.first_date(), 0), ConfigError);
}

TEST_CASE("volume ordering picks the most traded assets") {
    MarketPanel p(day("2020-01-01"), 3, {"A", "B"});
    for (std::size_t t = 0; t < 3; ++t) {
        p.set(t, 0, 1.0, 1000.0, 1.0);
        p.set(t, 1, 2.0, 10.0, 50.0);
    }
    const auto s = build_index_series(p, RankScheme::volume, {},
                                      KSchedule::constant(p.first_date(), 1), {}, p.first_date());
    CHECK(s.states.front().constituents == std::vector<std::string>{"B"});
}

TEST_CASE("log returns") {
    CHECK(log_returns(std::vector<double>{5, 5, 5}) == std::vector<double>{0, 0});
    const auto a = log_returns(std::vector<double>{1000, 2000});
    CHECK(a[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const auto b = log_returns(std::vector<double>{100, 110, 99});
    CHECK(b[0] == doctest::Approx(std::log(1.1)).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(std::log(0.9)).epsilon(1e-14));
    CHECK_THROWS_AS(log_returns(std::vector<double>{1}), ArgumentError);
    CHECK_THROWS_AS(log_returns(std::vector<double>{1, 0}), NumericError);
}
