#include "crix/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace crix::optim {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const std::vector<double>& x, std::size_t& count) {
    ++count;
    const double v = f(x);
    return std::isfinite(v) ? v : inf;
}

}  // namespace

Result nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt) {
    const std::size_t d = x0.size();
    Result res;
    const double f0 = safe_eval(f, x0, res.evaluations);
    res.x = x0;
    res.value = f0;
    if (d == 0) {
        res.converged = true;
        return res;
    }

    std::vector<std::vector<double>> simplex(d + 1, x0);
    std::vector<double> fv(d + 1, f0);
    for (std::size_t i = 0; i < d; ++i) {
        const double step = opt.initial_step * std::max(1.0, std::abs(x0[i]));
        simplex[i + 1][i] += step;
        fv[i + 1] = safe_eval(f, simplex[i + 1], res.evaluations);
    }

    std::vector<std::size_t> order(d + 1);
    std::vector<double> centroid(d), trial(d), trial2(d);
    auto point = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t k = 0; k < d; ++k) {
            out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
        }
    };

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[d - 1];

        const double spread = std::abs(fv[worst] - fv[best]);
        double size = 0.0;
        for (std::size_t i = 0; i <= d; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                size = std::max(size, std::abs(simplex[i][k] - simplex[best][k]));
            }
        }
        double xscale = 0.0;
        for (double v : simplex[best]) {
            xscale = std::max(xscale, std::abs(v));
        }
        if (std::isfinite(fv[worst]) &&
            spread <= opt.rel_tolerance * (std::abs(fv[best]) + 1e-12) &&
            size <= opt.rel_tolerance * std::max(1.0, xscale)) {
            res.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t k = 0; k < d; ++k) {
                centroid[k] += simplex[i][k] / static_cast<double>(d);
            }
        }

        point(-1.0, simplex[worst], trial);
        const double fr = safe_eval(f, trial, res.evaluations);
        if (fr < fv[best]) {
            point(-2.0, simplex[worst], trial2);
            const double fe = safe_eval(f, trial2, res.evaluations);
            if (fe < fr) {
                simplex[worst] = trial2;
                fv[worst] = fe;
            } else {
                simplex[worst] = trial;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = trial;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        point(outside ? -0.5 : 0.5, simplex[worst], trial2);
        const double fc = safe_eval(f, trial2, res.evaluations);
        if (fc < std::min(fr, fv[worst])) {
            simplex[worst] = trial2;
            fv[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t k = 0; k < d; ++k) {
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            }
            fv[i] = safe_eval(f, simplex[i], res.evaluations);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    if (fv[best] < f0) {
        res.x = simplex[best];
        res.value = fv[best];
    }
    return res;
}

std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x,
                                     double step) {
    std::vector<double> g(x.size());
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

Result bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opt) {
    const std::size_t d = x0.size();
    Result res;
    res.x = std::move(x0);
    res.value = f(res.x);
    ++res.evaluations;
    if (!std::isfinite(res.value)) {
        return res;
    }
    // Inverse Hessian approximation, identity start.
    std::vector<double> hinv(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        hinv[i * d + i] = 1.0;
    }
    auto grad = numeric_gradient(f, res.x, opt.fd_step);
    res.evaluations += 2 * d;
    auto max_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) {
            m = std::max(m, std::abs(e));
        }
        return m;
    };

    std::vector<double> dir(d), x_new(d), s(d), y(d), hy(d);
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (!std::isfinite(max_norm(grad))) {
            return res;
        }
        if (max_norm(grad) <= opt.gradient_tolerance) {
            res.converged = true;
            return res;
        }
        for (std::size_t i = 0; i < d; ++i) {
            dir[i] = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                dir[i] -= hinv[i * d + j] * grad[j];
            }
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            slope += dir[i] * grad[i];
        }
        if (!(slope < 0.0)) {
            // Not a descent direction: reset to steepest descent.
            std::fill(hinv.begin(), hinv.end(), 0.0);
            for (std::size_t i = 0; i < d; ++i) {
                hinv[i * d + i] = 1.0;
                dir[i] = -grad[i];
            }
            slope = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                slope -= grad[i] * grad[i];
            }
        }
        double step = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t i = 0; i < d; ++i) {
                x_new[i] = res.x[i] + step * dir[i];
            }
            f_new = f(x_new);
            ++res.evaluations;
            if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            return res;
        }
        auto grad_new = numeric_gradient(f, x_new, opt.fd_step);
        res.evaluations += 2 * d;
        double sy = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            s[i] = x_new[i] - res.x[i];
            y[i] = grad_new[i] - grad[i];
            sy += s[i] * y[i];
        }
        if (sy > 1e-12) {
            for (std::size_t i = 0; i < d; ++i) {
                hy[i] = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    hy[i] += hinv[i * d + j] * y[j];
                }
            }
            double yhy = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                yhy += y[i] * hy[i];
            }
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    hinv[i * d + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] -
                                              hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        res.x = x_new;
        res.value = f_new;
        grad = std::move(grad_new);
    }
    res.converged = max_norm(grad) <= opt.gradient_tolerance;
    return res;
}

}  // namespace crix::optim
