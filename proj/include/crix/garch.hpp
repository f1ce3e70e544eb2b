#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crix {

/// sigma2_t = omega + alpha * e_{t-1}^2 + beta1 * sigma2_{t-1}
struct GarchFit {
    double omega = 0.0;
    double alpha = 0.0;
    double beta1 = 0.0;
    std::vector<double> conditional_variances;
    bool converged = false;

    double unconditional_variance() const { return omega / (1.0 - alpha - beta1); }
    double mean_conditional_variance() const;
};

struct GarchOptions {
    double gradient_tolerance = 1e-6;
    std::size_t max_iterations = 200;
    double persistence_cap = 0.999;  // alpha + beta1 stays at or below this
};

inline constexpr std::size_t garch_min_length = 50;

/// Gaussian quasi-MLE started at omega = 0.1 var, alpha = 0.1, beta1 = 0.8,
/// sigma2_0 = var (var = mean square of the input). When the optimiser does
/// not reach the gradient tolerance the fit is flagged unconverged and the
/// conditional variances are the constant sample variance.
GarchFit garch11_fit(std::span<const double> returns, const GarchOptions& options = {});

/// Conditional variance path for given parameters.
std::vector<double> garch11_filter(std::span<const double> returns, double omega, double alpha,
                                   double beta1, double initial_variance);

}  // namespace crix
