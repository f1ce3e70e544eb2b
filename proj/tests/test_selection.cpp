#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "crix/density.hpp"
#include "crix/errors.hpp"
#include "crix/selection.hpp"
#include "fixtures.hpp"

using namespace crix;
using fixtures::day;

namespace {

const DateRange window90{day("2020-01-01"), day("2020-03-30")};

ResidualSeries series(std::vector<double> v, std::size_t s = 0) {
    ResidualSeries r;
    r.values = std::move(v);
    r.s = s;
    r.k = s + 1;
    r.beta.assign(s, 1.0);
    return r;
}

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 0.01);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = d(rng);
    }
    return out;
}

// Log-return gap between sum_i w_i Q_i P_it over all assets and over `basket`,
// with Q taken on the first day.
std::vector<double> brute_gap(const std::vector<std::vector<double>>& prices,
                              const std::vector<double>& q,
                              const std::vector<std::pair<std::size_t, double>>& basket) {
    const std::size_t days = prices.front().size();
    std::vector<double> market(days, 0.0), cand(days, 0.0);
    for (std::size_t t = 0; t < days; ++t) {
        for (std::size_t a = 0; a < prices.size(); ++a) {
            market[t] += q[a] * prices[a][t];
        }
        for (auto [a, w] : basket) {
            cand[t] += w * q[a] * prices[a][t];
        }
    }
    std::vector<double> out;
    for (std::size_t t = 1; t < days; ++t) {
        out.push_back(std::log(market[t] / market[t - 1]) - std::log(cand[t] / cand[t - 1]));
    }
    return out;
}

std::vector<std::vector<double>> walks(std::size_t assets, std::size_t days, std::uint64_t seed,
                                       double vol = 0.03) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> prices(assets, std::vector<double>(days));
    for (auto& path : prices) {
        double p = 1.0;
        for (auto& v : path) {
            v = p;
            p *= std::exp(vol * normal(rng));
        }
    }
    return prices;
}

}  // namespace

TEST_CASE("criterion arithmetic") {
    CHECK(std::abs(criterion_value(Criterion::gc, 100, 10, 1.0) - 0.01 / 0.81) <= 1e-12);
    CHECK(std::abs(criterion_value(Criterion::gfc, 100, 10, 1.0) - 0.0121) <= 1e-12);
    CHECK(std::abs(criterion_value(Criterion::sh, 100, 10, 1.0) - 0.012) <= 1e-12);
    CHECK(std::abs(criterion_value(Criterion::fpe, 100, 10, 1.0) - 110.0 / 9000.0) <= 1e-12);
    CHECK(std::abs(criterion_value(Criterion::cp, 100, 10, 1.0, 0.01) - 20.0) <= 1e-12);
    for (Criterion c : {Criterion::gc, Criterion::gfc, Criterion::sh, Criterion::fpe}) {
        CHECK(criterion_value(c, 50, 7, 0.0) == 0.0);
    }
}

TEST_CASE("criteria are increasing in rss and in s") {
    for (Criterion c : {Criterion::gc, Criterion::gfc, Criterion::sh, Criterion::fpe,
                        Criterion::cp}) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double rss : {0.1, 0.5, 1.0, 3.0}) {
            const double v = criterion_value(c, 60, 4, rss, 0.02);
            CHECK(v > prev);
            prev = v;
        }
        prev = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < 10; ++s) {
            const double v = criterion_value(c, 60, s, 0.7, 0.02);
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("criterion preconditions") {
    CHECK_THROWS_AS(criterion_value(Criterion::gc, 10, 10, 1.0), DomainError);
    CHECK_THROWS_AS(criterion_value(Criterion::fpe, 10, 12, 1.0), DomainError);
    CHECK_THROWS_AS(criterion_value(Criterion::cp, 100, 10, 1.0), ArgumentError);
    CHECK_THROWS_AS(criterion_value(Criterion::cp, 100, 10, 1.0, 0.0), ArgumentError);
    CHECK_THROWS_AS(criterion_value(Criterion::aic, 100, 10, 1.0), ArgumentError);
}

TEST_CASE("names parse back") {
    for (Criterion c : all_criteria) {
        CHECK(parse_criterion(to_string(c)) == c);
    }
    for (Variant v : all_variants) {
        CHECK(parse_variant(to_string(v)) == v);
    }
    CHECK(parse_criterion("aic") == Criterion::aic);
    CHECK(parse_variant("EFCRIX") == Variant::step1_global);
    CHECK_THROWS_AS(parse_criterion("bic"), ConfigError);
    CHECK_THROWS_AS(parse_variant("step2-local"), ConfigError);
    CHECK(variant_step(Variant::step5_local) == 5);
    CHECK(variant_step(Variant::step1_global) == 1);
}

TEST_CASE("candidate residuals match a day-by-day recomputation") {
    const auto prices = walks(3, 90, 7);
    const std::vector<double> q{1000.0, 100.0, 10.0};
    const auto panel = fixtures::panel_from_prices(prices, q);
    const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
    REQUIRE(w.ranked_ids() == std::vector<std::string>{"X000", "X001", "X002"});

    const std::vector<double> beta{0.7};
    const auto r = candidate_residuals(w, 1, 2, beta);
    const auto oracle = brute_gap(prices, q, {{0, 1.0}, {1, 0.7}});
    REQUIRE(r.length() == 89);
    CHECK(r.s == 1);
    for (std::size_t t = 0; t < oracle.size(); ++t) {
        CHECK(r.values[t] == doctest::Approx(oracle[t]).epsilon(1e-9).scale(1e-12));
    }
    const auto base = candidate_residuals(w, 1, 1, {});
    const auto oracle0 = brute_gap(prices, q, {{0, 1.0}});
    for (std::size_t t = 0; t < oracle0.size(); ++t) {
        CHECK(base.values[t] == doctest::Approx(oracle0[t]).epsilon(1e-9).scale(1e-12));
    }
    // The panel-level overload agrees with the window form.
    const auto direct =
        candidate_residuals(panel, window90, RankScheme::market_cap, {}, 1, 2, beta);
    CHECK(direct.values == r.values);
}

TEST_CASE("full universe at unit factors reproduces the market") {
    const auto panel = fixtures::random_panel(6, 90, 3);
    const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
    const std::vector<double> ones(2, 1.0);
    const auto r = candidate_residuals(w, 4, 6, ones);
    for (double e : r.values) {
        CHECK(e == 0.0);
    }
}

TEST_CASE("identical return assets give zero residuals at k = 1") {
    auto prices = walks(1, 90, 9);
    prices.resize(4, prices.front());
    const auto panel = fixtures::panel_from_prices(prices, {40.0, 30.0, 20.0, 10.0});
    const auto r = candidate_residuals(panel, window90, RankScheme::market_cap, {}, 1, 1, {});
    for (double e : r.values) {
        CHECK(e == 0.0);
    }
}

TEST_CASE("squared-error beta matches a grid search") {
    const auto prices = walks(4, 90, 12);
    const auto panel = fixtures::panel_from_prices(prices, {1000.0, 400.0, 200.0, 100.0});
    const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
    const auto est = estimate_beta(w, 1, 1, BetaObjective::squared_error);
    double best = std::numeric_limits<double>::infinity();
    double best_beta = 0.0;
    std::vector<double> scratch;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i <= n; ++i) {
        const double b = -5.0 + 10.0 * static_cast<double>(i) / n;
        const double beta[] = {b};
        if (!w.residuals(1, beta, scratch)) {
            continue;
        }
        double rss = 0.0;
        for (double e : scratch) {
            rss += e * e;
        }
        if (rss < best) {
            best = rss;
            best_beta = b;
        }
    }
    REQUIRE(est.beta.size() == 1);
    CHECK(std::abs(est.beta[0] - best_beta) <= 1e-3);
    CHECK(est.objective <= best * (1.0 + 1e-9));
}

TEST_CASE("twin assets: beta sum matches the grid optimum") {
    auto prices = walks(4, 90, 21);
    prices[2] = prices[1];
    const auto panel = fixtures::panel_from_prices(prices, {1000.0, 150.0, 150.0, 400.0});
    const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
    REQUIRE(w.ranked_ids()[0] == "X000");
    REQUIRE(w.ranked_ids()[1] == "X003");
    // k_base = 2 keeps X000 and X003; the twins follow.
    const auto est = estimate_beta(w, 2, 2, BetaObjective::squared_error);
    std::vector<double> scratch;
    auto rss_at = [&](double b1, double b2) {
        const double beta[] = {b1, b2};
        if (!w.residuals(2, beta, scratch)) {
            return std::numeric_limits<double>::infinity();
        }
        double rss = 0.0;
        for (double e : scratch) {
            rss += e * e;
        }
        return rss;
    };
    CHECK(rss_at(0.3, 1.1) == doctest::Approx(rss_at(1.1, 0.3)).epsilon(1e-12));
    double best = std::numeric_limits<double>::infinity();
    double best_sum = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double sum = -5.0 + 10.0 * i / 10000.0;
        const double v = rss_at(sum / 2.0, sum / 2.0);
        if (v < best) {
            best = v;
            best_sum = sum;
        }
    }
    CHECK(std::abs(est.beta[0] + est.beta[1] - best_sum) <= 2e-3);
}

TEST_CASE("beta stays at one when the start is already optimal") {
    auto prices = walks(1, 90, 5);
    prices.resize(3, prices.front());
    const auto panel = fixtures::panel_from_prices(prices, {30.0, 20.0, 10.0});
    const auto est = estimate_beta(panel, window90, RankScheme::market_cap, {}, 1, 1,
                                   BetaObjective::squared_error);
    CHECK(est.beta == std::vector<double>{1.0});
    CHECK_THROWS_AS(estimate_beta(panel, window90, RankScheme::market_cap, {}, 1, 0,
                                  BetaObjective::squared_error),
                    ArgumentError);
}

TEST_CASE("aic equals the direct likelihood sum") {
    const auto base = series(normal_sample(50, 31));
    const double h = sj_bandwidth(base.values);
    const auto aic = aic_value(base, base, h);
    double direct = 0.0;
    for (double x : base.values) {
        double f = 0.0;
        for (double v : base.values) {
            f += epanechnikov((x - v) / h);
        }
        direct += std::log(f / (50.0 * h));
    }
    CHECK(aic.value == doctest::Approx(-2.0 * direct).epsilon(1e-12));
    CHECK(aic.bandwidth == h);
    CHECK(aic_value(base, base).value == aic.value);
}

TEST_CASE("aic penalty adds exactly two per parameter") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto base = series(normal_sample(40, 100 + seed));
        const auto cand = series(normal_sample(40, 500 + seed), 3);
        auto cand1 = cand;
        cand1.s = 4;
        CHECK(aic_value(base, cand1).value - aic_value(base, cand).value == 2.0);
    }
    CHECK_THROWS_AS(aic_value(series(std::vector<double>(30, 0.0)), series({0.1})),
                    DegenerateSampleError);
}

TEST_CASE("identical-return universes choose k_start") {
    auto prices = walks(1, 90, 44);
    prices.resize(12, prices.front());
    std::vector<double> q;
    for (int i = 0; i < 12; ++i) {
        q.push_back(1200.0 - 100.0 * i);
    }
    const auto panel = fixtures::panel_from_prices(prices, q);
    for (Criterion c : all_criteria) {
        for (Variant v : all_variants) {
            const auto rep = select_k(panel, window90, RankScheme::market_cap, {}, c, v,
                                      default_k_start(v));
            CHECK_MESSAGE(rep.chosen_k == default_k_start(v), to_string(c), " ", to_string(v));
        }
    }
}

TEST_CASE("replicas of the driver basket stop at five") {
    const auto drivers = walks(5, 90, 77);
    const std::vector<double> dq{900.0, 800.0, 700.0, 600.0, 500.0};
    std::vector<std::vector<double>> prices = drivers;
    std::vector<double> q = dq;
    std::vector<double> basket(90, 0.0);
    for (std::size_t t = 0; t < 90; ++t) {
        for (std::size_t a = 0; a < 5; ++a) {
            basket[t] += dq[a] * drivers[a][t];
        }
    }
    for (std::size_t j = 0; j < 45; ++j) {
        std::vector<double> path(90);
        for (std::size_t t = 0; t < 90; ++t) {
            path[t] = basket[t] / basket[0];
        }
        prices.push_back(path);
        q.push_back(1.0 + 0.01 * static_cast<double>(j));
    }
    const auto panel = fixtures::panel_from_prices(prices, q);
    const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
    CHECK(w.universe() == 50);
    for (Criterion c : all_criteria) {
        const auto rep = select_k(panel, window90, RankScheme::market_cap, {}, c,
                                  Variant::step5_local, 5);
        CHECK_MESSAGE(rep.chosen_k == 5, to_string(c));
    }
}

TEST_CASE("global scan equals exhaustive enumeration") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto panel = fixtures::random_panel(10, 90, 900 + seed);
        auto w = std::make_shared<const SelectionWindow>(panel, window90,
                                                         RankScheme::market_cap, WeightScheme{});
        SelectionContext ctx(w);
        const auto rep = ctx.select(Criterion::aic, Variant::step1_global, 1);

        const auto base = candidate_residuals(*w, 1, 1, {});
        const KdeModel model(base.values, sj_bandwidth(base.values));
        std::size_t best_k = 1;
        double best = aic_value(base, base).value;
        for (std::size_t k = 2; k <= w->universe(); ++k) {
            const auto est = estimate_beta(*w, k - 1, 1, BetaObjective::likelihood, &model);
            std::vector<double> beta(k - 2, 1.0);
            beta.push_back(est.beta[0]);
            const auto cand = candidate_residuals(*w, 1, k, beta);
            const double v = aic_value(base, cand).value;
            CHECK(rep.candidates[k - 1].value == v);
            if (v < best) {
                best = v;
                best_k = k;
            }
        }
        CHECK(rep.chosen_k == best_k);
        CHECK(rep.stop_reason == StopReason::global_minimum);
    }
}

TEST_CASE("stop rules: soundness, spacing and global dominance") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto panel = fixtures::random_panel(14, 90, 40 + seed);
        auto w = std::make_shared<const SelectionWindow>(panel, window90,
                                                         RankScheme::market_cap, WeightScheme{});
        SelectionContext ctx(w);
        for (Criterion c : all_criteria) {
            const auto global = ctx.select(c, Variant::step1_global);
            const auto local = ctx.select(c, Variant::step1_local);
            CHECK(global.chosen().value <= local.chosen().value);
            for (const auto* rep : {&global, &local}) {
                for (std::size_t i = 1; i < rep->candidates.size(); ++i) {
                    CHECK(rep->candidates[i].k - rep->candidates[i - 1].k == 1);
                }
            }
            if (local.stop_reason == StopReason::local_rise) {
                const auto& last = local.candidates.back();
                CHECK(local.chosen().value <= last.value);
                CHECK(last.k == local.chosen_k + 1);
            }
            const auto five = ctx.select(c, Variant::step5_local);
            for (std::size_t i = 1; i < five.candidates.size(); ++i) {
                CHECK(five.candidates[i].k - five.candidates[i - 1].k == 5);
                CHECK(five.candidates[i].s == five.candidates[i].k - 5);
            }
        }
    }
}

TEST_CASE("probe: reflexivity and vanishing candidate") {
    const auto panel = fixtures::probe_panel(3, 100.0, 10.0);
    const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
    const auto same = cap_ratio_probe(w, 3, "X003", "X003");
    CHECK(same.delta_a == same.delta_b);

    const auto tiny = fixtures::probe_panel(3, 100.0, 100.0 * 1e-9);
    const SelectionWindow wt(tiny, window90, RankScheme::market_cap, {});
    const auto lim = cap_ratio_probe(wt, 3, "X003", "X004", false);
    CHECK(std::abs(lim.delta_b - 2.0) <= 1e-3);
    CHECK(lim.beta_b == 1.0);
}

TEST_CASE("probe: larger candidates improve aic more often") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto panel = fixtures::probe_panel(seed, 100.0, 10.0);
        const SelectionWindow w(panel, window90, RankScheme::market_cap, {});
        const auto r = cap_ratio_probe(w, 3, "X003", "X004", false);
        wins += r.delta_a <= r.delta_b ? 1 : 0;
    }
    CHECK(wins >= 16);
}

TEST_CASE("closed-form criteria stop scanning before s reaches T") {
    const auto panel = fixtures::random_panel(100, 90, 123);
    SelectionContext ctx(std::make_shared<const SelectionWindow>(panel, window90,
                                                                 RankScheme::market_cap,
                                                                 WeightScheme{}));
    const auto gc = ctx.select(Criterion::gc, Variant::step1_global, 1);
    CHECK(gc.candidates.back().k == 89);  // T = 89 returns, s = 88
    CHECK(gc.candidates.back().s < 89);
    const auto aic = ctx.select(Criterion::aic, Variant::step1_global, 1);
    CHECK(aic.candidates.back().k == 100);
}
