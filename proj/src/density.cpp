#include "crix/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crix/errors.hpp"

namespace crix {

namespace {

constexpr double inv_sqrt_2pi = 0.39894228040143267794;

// Derivatives of the standard normal density via Hermite polynomials.
double phi4(double x) noexcept {
    const double x2 = x * x;
    return (x2 * x2 - 6.0 * x2 + 3.0) * inv_sqrt_2pi * std::exp(-0.5 * x2);
}

double phi6(double x) noexcept {
    const double x2 = x * x;
    return (x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0) * inv_sqrt_2pi *
           std::exp(-0.5 * x2);
}

// psi_r(g) = n^-2 g^-(r+1) sum_i sum_j phi^(r)((x_i - x_j)/g), exploiting symmetry.
template <class F>
double functional(std::span<const double> x, double g, int r, F deriv) {
    const std::size_t n = x.size();
    double sum = static_cast<double>(n) * deriv(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            sum += 2.0 * deriv((x[i] - x[j]) / g);
        }
    }
    return sum / (static_cast<double>(n) * static_cast<double>(n) * std::pow(g, r + 1));
}

}  // namespace

double epanechnikov(double u) noexcept {
    if (std::abs(u) > epa_support) {
        return 0.0;
    }
    return epa_peak * (1.0 - u * u / 5.0);
}

double epanechnikov_roughness() noexcept {
    // (3 / (4 sqrt 5))^2 * 16 sqrt 5 / 15 = 3 sqrt 5 / 25
    return 3.0 * epa_support / 25.0;
}

double gauss_to_epanechnikov_ratio() noexcept {
    const double gauss_roughness = 0.5 / std::sqrt(std::numbers::pi);
    return std::pow(epanechnikov_roughness() / gauss_roughness, 0.2);
}

KdeModel::KdeModel(std::vector<double> sample, double bandwidth)
    : sorted_(std::move(sample)), h_(bandwidth) {
    if (sorted_.empty()) {
        throw DegenerateSampleError("kernel density needs a non-empty sample");
    }
    if (!(h_ > 0.0) || !std::isfinite(h_)) {
        throw ArgumentError("kernel bandwidth must be positive");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double KdeModel::operator()(double x) const noexcept {
    const double reach = epa_support * h_;
    auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), x - reach);
    double sum = 0.0;
    for (auto it = lo; it != sorted_.end() && *it <= x + reach; ++it) {
        sum += epanechnikov((x - *it) / h_);
    }
    return sum / (static_cast<double>(sorted_.size()) * h_);
}

double kde_eval(const KdeModel& model, double x) noexcept { return model(x); }

double sj_bandwidth(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 5) {
        throw DegenerateSampleError("plug-in bandwidth needs at least 5 points");
    }
    const double nd = static_cast<double>(n);
    double mean = 0.0;
    for (double v : sample) {
        mean += v;
    }
    mean /= nd;
    double ss = 0.0;
    for (double v : sample) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / (nd - 1.0));
    const bool constant =
        std::all_of(sample.begin(), sample.end(), [&](double v) { return v == sample[0]; });
    if (constant || !(sd > 0.0)) {
        throw DegenerateSampleError("plug-in bandwidth needs a non-constant sample");
    }

    // Robust scale: min(sd, IQR / 1.349), falling back to sd when IQR is 0.
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double pos = p * (nd - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr_scale = (quantile(0.75) - quantile(0.25)) / 1.349;
    const double scale = iqr_scale > 0.0 ? std::min(sd, iqr_scale) : sd;

    // Stage 2: normal-scale psi_8, pilot g2 for psi_6.
    const double psi8 = 105.0 / (32.0 * std::sqrt(std::numbers::pi) * std::pow(scale, 9));
    const double g2 = std::pow(30.0 * inv_sqrt_2pi / (psi8 * nd), 1.0 / 9.0);
    const double psi6 = functional(sorted, g2, 6, phi6);

    // Stage 1: pilot g1 for psi_4.
    const double g1 = std::pow(-6.0 * inv_sqrt_2pi / (psi6 * nd), 1.0 / 7.0);
    const double psi4 = functional(sorted, g1, 4, phi4);
    if (!(psi4 > 0.0) || !std::isfinite(psi4)) {
        throw NumericError("plug-in bandwidth: non-positive curvature estimate");
    }

    // AMISE-optimal Gaussian-kernel bandwidth, converted to Epa.
    const double gauss_roughness = 0.5 / std::sqrt(std::numbers::pi);
    const double h_gauss = std::pow(gauss_roughness / (psi4 * nd), 0.2);
    return h_gauss * gauss_to_epanechnikov_ratio();
}

LogLikelihood kde_loglik(const KdeModel& model, std::span<const double> points, double floor) {
    if (points.empty()) {
        throw ArgumentError("log-likelihood needs at least one point");
    }
    if (!(floor > 0.0)) {
        throw ArgumentError("density floor must be positive");
    }
    LogLikelihood out;
    for (double x : points) {
        double f = model(x);
        if (!(f >= floor)) {
            f = floor;
            ++out.floor_hits;
        }
        out.value += std::log(f);
    }
    return out;
}

}  // namespace crix
