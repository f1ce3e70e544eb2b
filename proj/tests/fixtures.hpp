#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "crix/market_data.hpp"

namespace fixtures {

inline crix::Date day(const char* text) { return crix::parse_date(text); }

inline std::string asset_name(std::size_t i) {
    std::string s = std::to_string(i);
    return "X" + std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
}

/// Panel from price paths [asset][day] with constant quantities; NaN marks
/// a missing cell. Volume = turnover * cap.
inline crix::MarketPanel panel_from_prices(const std::vector<std::vector<double>>& prices,
                                           const std::vector<double>& quantities,
                                           crix::Date start = day("2020-01-01"),
                                           double turnover = 0.1) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        ids.push_back(asset_name(i));
    }
    crix::MarketPanel panel(start, prices.front().size(), ids);
    for (std::size_t a = 0; a < prices.size(); ++a) {
        for (std::size_t t = 0; t < prices[a].size(); ++t) {
            const double p = prices[a][t];
            if (!std::isnan(p)) {
                panel.set(t, a, p, p * quantities[a], p * quantities[a] * turnover);
            }
        }
    }
    return panel;
}

/// Independent geometric random walks; caps scaled by `caps`.
inline crix::MarketPanel random_panel(std::size_t assets, std::size_t days, std::uint64_t seed,
                                      crix::Date start = day("2020-01-01"), double vol = 0.03) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    std::vector<std::vector<double>> prices(assets, std::vector<double>(days));
    std::vector<double> quantities(assets);
    for (std::size_t a = 0; a < assets; ++a) {
        double p = unif(rng) * 10.0;
        quantities[a] = unif(rng) * 1000.0 * static_cast<double>(assets - a);
        for (std::size_t t = 0; t < days; ++t) {
            prices[a][t] = p;
            p *= std::exp(vol * normal(rng));
        }
    }
    return panel_from_prices(prices, quantities, start);
}

/// Three large base assets, candidates "X003" (cap `cap_a`) and "X004"
/// (cap `cap_b`) with equal return processes, and two remainder assets.
/// Every price starts at 1 so caps are the quantities.
inline crix::MarketPanel probe_panel(std::uint64_t seed, double cap_a, double cap_b,
                                     std::size_t days = 91, double vol = 0.03) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::vector<double> quantities{1000.0, 800.0, 600.0, cap_a, cap_b, 50.0, 30.0};
    std::vector<std::vector<double>> prices(quantities.size(), std::vector<double>(days));
    for (auto& path : prices) {
        double p = 1.0;
        for (std::size_t t = 0; t < days; ++t) {
            path[t] = p;
            p *= std::exp(vol * normal(rng));
        }
    }
    return panel_from_prices(prices, quantities);
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n = 10000) {
    const double h = (b - a) / static_cast<double>(n);
    double sum = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) {
        sum += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

}  // namespace fixtures
