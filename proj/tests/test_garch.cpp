#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "crix/errors.hpp"
#include "crix/garch.hpp"

using namespace crix;

namespace {

std::vector<double> simulate(std::size_t n, double omega, double alpha, double beta1,
                             std::uint64_t seed, std::size_t burn = 500) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    double s2 = omega / (1.0 - alpha - beta1);
    double e = 0.0;
    std::vector<double> out;
    for (std::size_t t = 0; t < n + burn; ++t) {
        s2 = omega + alpha * e * e + beta1 * s2;
        e = std::sqrt(s2) * z(rng);
        if (t >= burn) {
            out.push_back(e);
        }
    }
    return out;
}

double sample_variance(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) {
        m += v;
    }
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST_CASE("garch recovers simulated parameters") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = simulate(5000, 0.1, 0.1, 0.8, seed);
        const auto fit = garch11_fit(r);
        REQUIRE(fit.converged);
        CHECK(std::abs(fit.alpha - 0.1) <= 0.05);
        CHECK(std::abs(fit.beta1 - 0.8) <= 0.05);
        CHECK(fit.omega > 0.0);
        CHECK(fit.alpha + fit.beta1 <= 0.999 + 1e-12);
        const double ratio = fit.unconditional_variance() / sample_variance(r);
        CHECK(ratio >= 0.5);
        CHECK(ratio <= 2.0);
    }
}

TEST_CASE("garch on iid noise finds no arch effect") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> r(5000);
    for (auto& v : r) {
        v = z(rng);
    }
    const auto fit = garch11_fit(r);
    CHECK(fit.alpha <= 0.05);
    CHECK(fit.conditional_variances.size() == r.size());
    for (double v : fit.conditional_variances) {
        CHECK(v > 0.0);
    }
}

TEST_CASE("garch conditional variances follow the recursion") {
    const auto r = simulate(400, 0.05, 0.15, 0.7, 4);
    const auto fit = garch11_fit(r);
    REQUIRE(fit.converged);
    double ms = 0.0;
    for (double v : r) {
        ms += v * v;
    }
    ms /= static_cast<double>(r.size());
    double prev = ms;
    for (std::size_t t = 0; t < r.size(); ++t) {
        const double expect =
            t == 0 ? ms : fit.omega + fit.alpha * r[t - 1] * r[t - 1] + fit.beta1 * prev;
        CHECK(fit.conditional_variances[t] == doctest::Approx(expect).epsilon(1e-12));
        prev = expect;
    }
}

TEST_CASE("garch fallback on non-convergence") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z(0.0, 2.0);
    std::vector<double> r(300);
    for (auto& v : r) {
        v = z(rng);
    }
    GarchOptions opt;
    opt.max_iterations = 1;
    const auto fit = garch11_fit(r, opt);
    CHECK_FALSE(fit.converged);
    double ms = 0.0;
    for (double v : r) {
        ms += v * v;
    }
    ms /= static_cast<double>(r.size());
    REQUIRE(fit.conditional_variances.size() == r.size());
    for (double v : fit.conditional_variances) {
        CHECK(v == doctest::Approx(ms).epsilon(1e-12));
    }
    CHECK(fit.mean_conditional_variance() == doctest::Approx(ms).epsilon(1e-12));
}

TEST_CASE("garch preconditions") {
    CHECK_THROWS_AS(garch11_fit(std::vector<double>(100, 0.3)), DegenerateSampleError);
    CHECK_THROWS_AS(garch11_fit(std::vector<double>(49, 0.3)), ArgumentError);
}
