// Kernel density machinery on the unit-variance Epanechnikov kernel
//
//   Epa(u) = 3 / (4 sqrt 5) * (1 - u^2 / 5) * 1{|u| <= sqrt 5}
//
// with a two-stage direct plug-in bandwidth (Sheather-Jones / Wand-Jones).

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crix {

inline constexpr double epa_support = 2.23606797749978969641;  // sqrt(5)
inline constexpr double epa_peak = 0.33541019662496845446;     // 3 / (4 sqrt 5)

double epanechnikov(double u) noexcept;

/// R(K) = int K^2 and mu2(K) = int u^2 K for the kernel above (closed form).
double epanechnikov_roughness() noexcept;
inline constexpr double epanechnikov_second_moment = 1.0;

/// Ratio delta0(Epa) / delta0(Gauss) with delta0 = (R / mu2^2)^(1/5); converts
/// a Gaussian-kernel bandwidth into the equivalent one for Epa.
double gauss_to_epanechnikov_ratio() noexcept;

class KdeModel {
public:
    /// Throws DegenerateSampleError for an empty sample and
    /// ArgumentError for a non-positive bandwidth.
    KdeModel(std::vector<double> sample, double bandwidth);

    double bandwidth() const noexcept { return h_; }
    /// Sample sorted ascending.
    const std::vector<double>& sample() const noexcept { return sorted_; }

    double operator()(double x) const noexcept;

private:
    std::vector<double> sorted_;
    double h_;
};

double kde_eval(const KdeModel& model, double x) noexcept;

/// Two-stage direct plug-in bandwidth for the Epanechnikov kernel above.
/// Needs at least 5 points with positive variance.
double sj_bandwidth(std::span<const double> sample);

struct LogLikelihood {
    double value = 0.0;
    std::size_t floor_hits = 0;  // points whose density fell below the floor
};

/// sum_t log(max(f(points_t), floor)) under `model`.
LogLikelihood kde_loglik(const KdeModel& model, std::span<const double> points,
                         double floor = 1e-12);

}  // namespace crix
