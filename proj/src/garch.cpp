#include "crix/garch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crix/errors.hpp"
#include "crix/optimize.hpp"

namespace crix {

double GarchFit::mean_conditional_variance() const {
    if (conditional_variances.empty()) {
        return 0.0;
    }
    return std::accumulate(conditional_variances.begin(), conditional_variances.end(), 0.0) /
           static_cast<double>(conditional_variances.size());
}

std::vector<double> garch11_filter(std::span<const double> returns, double omega, double alpha,
                                   double beta1, double initial_variance) {
    std::vector<double> s2(returns.size());
    double prev = initial_variance;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        s2[t] = t == 0 ? initial_variance
                       : omega + alpha * returns[t - 1] * returns[t - 1] + beta1 * prev;
        prev = s2[t];
    }
    return s2;
}

namespace {

// theta = (log omega, a, b):
//   alpha = cap * e^a / (1 + e^a + e^b), beta1 = cap * e^b / (1 + e^a + e^b)
struct Params {
    double omega, alpha, beta1;
};

Params decode(const std::vector<double>& theta, double cap) {
    const double ea = std::exp(theta[1]);
    const double eb = std::exp(theta[2]);
    const double denom = 1.0 + ea + eb;
    return {std::exp(theta[0]), cap * ea / denom, cap * eb / denom};
}

std::vector<double> encode(double omega, double alpha, double beta1, double cap) {
    const double ra = alpha / cap;
    const double rb = beta1 / cap;
    const double rest = 1.0 - ra - rb;
    return {std::log(omega), std::log(ra / rest), std::log(rb / rest)};
}

}  // namespace

GarchFit garch11_fit(std::span<const double> returns, const GarchOptions& options) {
    const std::size_t n = returns.size();
    if (n < garch_min_length) {
        throw ArgumentError("GARCH(1,1) fit needs at least 50 observations");
    }
    const double nd = static_cast<double>(n);
    double mean = 0.0;
    double mean_square = 0.0;
    for (double r : returns) {
        mean += r;
        mean_square += r * r;
    }
    mean /= nd;
    mean_square /= nd;
    double centered = 0.0;
    for (double r : returns) {
        centered += (r - mean) * (r - mean);
    }
    const bool constant =
        std::all_of(returns.begin(), returns.end(), [&](double r) { return r == returns[0]; });
    if (constant || !(centered > 0.0)) {
        throw DegenerateSampleError("GARCH(1,1) fit on a constant series");
    }

    // Fit on the unit-variance rescaled series; omega scales back by var.
    const double var = mean_square;
    const double scale = std::sqrt(var);
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) {
        z[t] = returns[t] / scale;
    }
    const double cap = options.persistence_cap;

    auto nll = [&](const std::vector<double>& theta) {
        const Params p = decode(theta, cap);
        double prev = 1.0;
        double total = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double s2 = t == 0 ? 1.0 : p.omega + p.alpha * z[t - 1] * z[t - 1] + p.beta1 * prev;
            if (!(s2 > 0.0)) {
                return std::numeric_limits<double>::infinity();
            }
            total += 0.5 * (std::log(s2) + z[t] * z[t] / s2);
            prev = s2;
        }
        return total / nd;
    };

    optim::BfgsOptions bopt;
    bopt.gradient_tolerance = options.gradient_tolerance;
    bopt.max_iterations = options.max_iterations;
    const auto result = optim::bfgs(nll, encode(0.1, 0.1, 0.8, cap), bopt);
    const Params p = decode(result.x, cap);

    GarchFit fit;
    fit.omega = p.omega * var;
    fit.alpha = p.alpha;
    fit.beta1 = p.beta1;
    fit.converged = result.converged;
    if (fit.converged) {
        fit.conditional_variances = garch11_filter(returns, fit.omega, fit.alpha, fit.beta1, var);
    } else {
        fit.conditional_variances.assign(n, var);
    }
    return fit;
}

}  // namespace crix
