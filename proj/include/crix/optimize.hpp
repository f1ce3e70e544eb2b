#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace crix::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct Result {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    double initial_step = 0.5;
    double rel_tolerance = 1e-6;
    std::size_t max_iterations = 500;
};

/// Derivative-free simplex minimisation. Non-finite objective values are
/// treated as +inf. Returns the start point unless a strictly better point
/// was found.
Result nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt = {});

struct BfgsOptions {
    double gradient_tolerance = 1e-6;
    std::size_t max_iterations = 200;
    double fd_step = 1e-6;
};

/// Quasi-Newton minimisation with central-difference gradients; converged
/// when the max-norm of the gradient drops below the tolerance.
Result bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opt = {});

std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x,
                                     double step);

}  // namespace crix::optim
