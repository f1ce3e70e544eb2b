#include "crix/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "crix/errors.hpp"
#include "crix/optimize.hpp"

namespace crix {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Log-return gaps below this are rounding noise of the log ratios.
constexpr double residual_zero = 1e-12;

// The likelihood term is kept on a 2^-32 grid so that adding the integer
// penalty 2s is exact.
double quantize(double x) { return std::ldexp(std::nearbyint(std::ldexp(x, 32)), -32); }

std::string lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

std::string_view to_string(Criterion c) {
    switch (c) {
    case Criterion::aic:
        return "AIC";
    case Criterion::gc:
        return "GC";
    case Criterion::gfc:
        return "GFC";
    case Criterion::sh:
        return "SH";
    case Criterion::cp:
        return "Cp";
    case Criterion::fpe:
        return "FPE";
    }
    return "?";
}

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::step5_local:
        return "step5-local";
    case Variant::step1_local:
        return "step1-local";
    case Variant::step1_global:
        return "step1-global";
    }
    return "?";
}

std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::local_rise:
        return "local-rise";
    case StopReason::global_minimum:
        return "global-minimum";
    case StopReason::universe_exhausted:
        return "universe-exhausted";
    }
    return "?";
}

Criterion parse_criterion(std::string_view text) {
    const std::string t = lower(text);
    for (Criterion c : all_criteria) {
        if (lower(to_string(c)) == t) {
            return c;
        }
    }
    throw ConfigError(fmt::format("unknown criterion '{}'", text));
}

Variant parse_variant(std::string_view text) {
    const std::string t = lower(text);
    if (t == "step5-local" || t == "crix") {
        return Variant::step5_local;
    }
    if (t == "step1-local" || t == "ecrix") {
        return Variant::step1_local;
    }
    if (t == "step1-global" || t == "efcrix") {
        return Variant::step1_global;
    }
    throw ConfigError(fmt::format("unknown variant '{}'", text));
}

std::size_t variant_step(Variant v) { return v == Variant::step5_local ? 5 : 1; }

std::size_t default_k_start(Variant v) { return variant_step(v); }

double ResidualSeries::rss() const {
    double sum = 0.0;
    for (double e : values) {
        sum += e * e;
    }
    return sum;
}

SelectionWindow::SelectionWindow(const MarketPanel& panel, DateRange window, RankScheme ordering,
                                 const WeightScheme& weights)
    : window_(window) {
    auto [filled, mask] = apply_missing_policy(panel, window, MissingMode::derivation);
    const std::size_t t0 = filled.date_index(window.first);
    const std::size_t t1 = filled.date_index(window.last);
    if (t1 <= t0) {
        throw ArgumentError("derivation window needs at least two days");
    }
    // Assets without positive quantity on the first day carry no weight.
    for (std::size_t a = 0; a < filled.n_assets(); ++a) {
        if (mask.eligible[a] && !(filled.quantity(t0, a) > 0.0)) {
            mask.eligible[a] = false;
        }
    }
    const auto ranked = rank_assets(filled, window.last, ordering, all_assets, &mask.eligible);
    if (ranked.empty()) {
        throw ShortageError(0, 1, "derivation window " + format_date(window.first));
    }
    for (std::size_t a : ranked) {
        ids_.push_back(filled.assets()[a]);
    }
    const Composition frozen = freeze_composition(filled, window.first, ids_, weights);

    const std::size_t days = t1 - t0 + 1;
    dates_.assign(filled.dates().begin() + static_cast<std::ptrdiff_t>(t0),
                  filled.dates().begin() + static_cast<std::ptrdiff_t>(t1 + 1));
    values_.assign(ranked.size(), std::vector<double>(days));
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const double w = frozen.betas[r] * frozen.quantities[r];
        for (std::size_t d = 0; d < days; ++d) {
            values_[r][d] = w * filled.price(t0 + d, ranked[r]);
        }
    }
    cumulative_.assign(ranked.size() + 1, std::vector<double>(days, 0.0));
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        for (std::size_t d = 0; d < days; ++d) {
            cumulative_[r + 1][d] = cumulative_[r][d] + values_[r][d];
        }
    }
    const auto& market = cumulative_.back();
    market_returns_.resize(days - 1);
    for (std::size_t d = 1; d < days; ++d) {
        if (!(market[d] > 0.0) || !(market[d - 1] > 0.0)) {
            throw DegenerateCompositionError("total-market proxy is not positive in window");
        }
        market_returns_[d - 1] = std::log(market[d] / market[d - 1]);
    }
}

std::optional<std::size_t> SelectionWindow::rank_of(const std::string& id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - ids_.begin());
}

namespace {

bool gaps_from_basket(const std::vector<double>& basket, const std::vector<double>& market_returns,
                      std::vector<double>& out) {
    out.resize(market_returns.size());
    for (std::size_t d = 0; d < basket.size(); ++d) {
        if (!(basket[d] > 0.0) || !std::isfinite(basket[d])) {
            return false;
        }
    }
    for (std::size_t d = 1; d < basket.size(); ++d) {
        const double e = market_returns[d - 1] - std::log(basket[d] / basket[d - 1]);
        out[d - 1] = std::abs(e) < residual_zero ? 0.0 : e;
    }
    return true;
}

}  // namespace

bool SelectionWindow::residuals(std::size_t k_base, std::span<const double> beta,
                                std::vector<double>& out) const {
    if (k_base + beta.size() > universe() || k_base + beta.size() == 0) {
        throw ArgumentError(fmt::format("candidate with {} + {} assets exceeds universe of {}",
                                        k_base, beta.size(), universe()));
    }
    std::vector<double> basket = cumulative_[k_base];
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const auto& v = values_[k_base + j];
        for (std::size_t d = 0; d < basket.size(); ++d) {
            basket[d] += beta[j] * v[d];
        }
    }
    return gaps_from_basket(basket, market_returns_, out);
}

bool SelectionWindow::residuals_with(std::size_t k_base, std::span<const std::size_t> extra,
                                     std::span<const double> beta,
                                     std::vector<double>& out) const {
    if (extra.size() != beta.size() || k_base > universe()) {
        throw ArgumentError("extra assets and factors differ in length");
    }
    std::vector<double> basket = cumulative_[k_base];
    for (std::size_t j = 0; j < extra.size(); ++j) {
        if (extra[j] >= universe()) {
            throw ArgumentError("extra asset outside the ranked universe");
        }
        const auto& v = values_[extra[j]];
        for (std::size_t d = 0; d < basket.size(); ++d) {
            basket[d] += beta[j] * v[d];
        }
    }
    return gaps_from_basket(basket, market_returns_, out);
}

ResidualSeries candidate_residuals(const SelectionWindow& window, std::size_t k_base,
                                   std::size_t k_j, std::span<const double> beta) {
    if (k_j < k_base || beta.size() != k_j - k_base) {
        throw ArgumentError(fmt::format("need {} factors for k_base={} k_j={}, got {}",
                                        k_j < k_base ? 0 : k_j - k_base, k_base, k_j,
                                        beta.size()));
    }
    ResidualSeries out;
    out.k = k_j;
    out.s = k_j - k_base;
    out.beta.assign(beta.begin(), beta.end());
    out.dates.assign(window.dates().begin() + 1, window.dates().end());
    if (!window.residuals(k_base, beta, out.values)) {
        throw NumericError(fmt::format("candidate basket k={} not positive in window", k_j));
    }
    return out;
}

ResidualSeries candidate_residuals(const MarketPanel& panel, DateRange window,
                                   RankScheme ordering, const WeightScheme& weights,
                                   std::size_t k_base, std::size_t k_j,
                                   std::span<const double> beta) {
    const SelectionWindow w(panel, window, ordering, weights);
    return candidate_residuals(w, k_base, k_j, beta);
}

BetaEstimate estimate_beta(const SelectionWindow& window, std::size_t k_base, std::size_t s,
                           BetaObjective objective, const KdeModel* model, double floor) {
    if (s == 0) {
        throw ArgumentError("beta estimation needs s >= 1");
    }
    if (objective == BetaObjective::likelihood && model == nullptr) {
        throw ArgumentError("likelihood objective needs a kernel density model");
    }
    std::vector<double> scratch;
    auto f = [&](const std::vector<double>& beta) {
        if (!window.residuals(k_base, beta, scratch)) {
            return inf;
        }
        if (objective == BetaObjective::likelihood) {
            return -kde_loglik(*model, scratch, floor).value;
        }
        double rss = 0.0;
        for (double e : scratch) {
            rss += e * e;
        }
        return rss;
    };
    const std::vector<double> start(s, 1.0);
    if (!std::isfinite(f(start))) {
        throw NumericError("beta objective not finite at beta = 1");
    }
    const auto res = optim::nelder_mead(f, start);
    return {res.x, res.value, res.converged};
}

BetaEstimate estimate_beta(const MarketPanel& panel, DateRange window, RankScheme ordering,
                           const WeightScheme& weights, std::size_t k_base, std::size_t s,
                           BetaObjective objective, double floor) {
    const SelectionWindow w(panel, window, ordering, weights);
    if (objective == BetaObjective::squared_error) {
        return estimate_beta(w, k_base, s, objective, nullptr, floor);
    }
    std::vector<double> base;
    if (!w.residuals(k_base, {}, base)) {
        throw NumericError("base basket not positive in window");
    }
    const KdeModel model(base, sj_bandwidth(base));
    return estimate_beta(w, k_base, s, objective, &model, floor);
}

double criterion_value(Criterion criterion, std::size_t t, std::size_t s, double rss,
                       std::optional<double> sigma2) {
    if (t == 0 || s >= t) {
        throw DomainError(fmt::format("criterion needs s < T (s={}, T={})", s, t));
    }
    const double T = static_cast<double>(t);
    const double S = static_cast<double>(s);
    switch (criterion) {
    case Criterion::gc: {
        const double shrink = 1.0 - S / T;
        return (rss / T) / (shrink * shrink);
    }
    case Criterion::gfc: {
        const double grow = 1.0 + S / T;
        return rss / T * grow * grow;
    }
    case Criterion::sh:
        return (T + 2.0 * S) / (T * T) * rss;
    case Criterion::cp:
        if (!sigma2 || !(*sigma2 > 0.0)) {
            throw ArgumentError("Mallows' Cp needs a positive variance");
        }
        return rss / *sigma2 - T + 2.0 * S;
    case Criterion::fpe:
        return (T + S) / ((T - S) * T) * rss;
    case Criterion::aic:
        break;
    }
    throw ArgumentError("AIC is likelihood based; use aic_value");
}

double criterion_value(Criterion criterion, const ResidualSeries& residuals,
                       std::optional<double> sigma2) {
    return criterion_value(criterion, residuals.length(), residuals.s, residuals.rss(), sigma2);
}

AicResult aic_value(const ResidualSeries& base, const ResidualSeries& candidate,
                    std::optional<double> bandwidth, double floor) {
    if (base.values.empty() || is_constant(base.values)) {
        throw DegenerateSampleError("AIC base residuals are constant");
    }
    const double h = bandwidth ? *bandwidth : sj_bandwidth(base.values);
    const KdeModel model(base.values, h);
    const auto ll = kde_loglik(model, candidate.values, floor);
    return {quantize(-2.0 * ll.value) + 2.0 * static_cast<double>(candidate.s), h,
            ll.floor_hits};
}

double cp_variance(std::span<const double> residuals) {
    double ms = 0.0;
    for (double e : residuals) {
        ms += e * e;
    }
    ms /= static_cast<double>(std::max<std::size_t>(residuals.size(), 1));
    if (residuals.size() < garch_min_length || is_constant(residuals)) {
        return ms;
    }
    return garch11_fit(residuals).mean_conditional_variance();
}

const CandidateScore& SelectionReport::chosen() const {
    for (const auto& c : candidates) {
        if (c.k == chosen_k) {
            return c;
        }
    }
    throw ArgumentError("chosen k missing from candidates");
}

SelectionContext::SelectionContext(std::shared_ptr<const SelectionWindow> window,
                                   SelectionOptions options)
    : window_(std::move(window)), options_(options) {}

const SelectionContext::Base& SelectionContext::base(std::size_t k_first) {
    auto it = bases_.find(k_first);
    if (it != bases_.end()) {
        return it->second;
    }
    Base b;
    if (!window_->residuals(k_first, {}, b.residuals)) {
        throw NumericError(fmt::format("base basket k={} not positive in window", k_first));
    }
    double h = 0.0;
    if (options_.bandwidth) {
        h = *options_.bandwidth;
    } else if (b.residuals.size() >= 5 && !is_constant(b.residuals)) {
        h = sj_bandwidth(b.residuals);
    } else {
        // No spread to estimate: a narrow kernel keeps the likelihood term
        // identical for every candidate matching the base exactly.
        h = 1e-6 * std::max(1.0, std::abs(b.residuals.front()));
    }
    b.model = std::make_unique<KdeModel>(b.residuals, h);
    return bases_.emplace(k_first, std::move(b)).first->second;
}

const BetaEstimate& SelectionContext::beta_for(BetaObjective objective, std::size_t k_first,
                                               std::size_t k_prev, std::size_t step) {
    const auto key = std::make_tuple(static_cast<int>(objective), k_first, k_prev, step);
    auto it = betas_.find(key);
    if (it != betas_.end()) {
        return it->second;
    }
    const KdeModel* model =
        objective == BetaObjective::likelihood ? base(k_first).model.get() : nullptr;
    auto est = estimate_beta(*window_, k_prev, step, objective, model, options_.density_floor);
    return betas_.emplace(key, std::move(est)).first->second;
}

CandidateScore SelectionContext::score(Criterion criterion, std::size_t k_first,
                                       std::size_t k_prev, std::size_t k_j) {
    const Base& b = base(k_first);
    CandidateScore out;
    out.k = k_j;
    out.s = k_j - k_first;
    std::vector<double> residuals;
    if (k_j == k_first) {
        residuals = b.residuals;
    } else {
        const auto objective =
            criterion == Criterion::aic ? BetaObjective::likelihood : BetaObjective::squared_error;
        const auto& est = beta_for(objective, k_first, k_prev, k_j - k_prev);
        if (!window_->residuals(k_prev, est.beta, residuals)) {
            throw NumericError(fmt::format("candidate basket k={} not positive", k_j));
        }
        out.beta.assign(k_prev - k_first, 1.0);
        out.beta.insert(out.beta.end(), est.beta.begin(), est.beta.end());
    }

    const std::size_t T = residuals.size();
    if (criterion == Criterion::aic) {
        const auto ll = kde_loglik(*b.model, residuals, options_.density_floor);
        out.value = quantize(-2.0 * ll.value) + 2.0 * static_cast<double>(out.s);
        out.floor_hits = ll.floor_hits;
        return out;
    }
    double rss = 0.0;
    for (double e : residuals) {
        rss += e * e;
    }
    if (criterion != Criterion::cp) {
        out.value = criterion_value(criterion, T, out.s, rss);
        return out;
    }
    if (out.s >= T) {
        throw DomainError("criterion needs s < T");
    }
    if (rss == 0.0) {
        out.value = -static_cast<double>(T) + 2.0 * static_cast<double>(out.s);
        return out;
    }
    const auto key = std::make_tuple(k_first, k_prev, k_j);
    auto it = cp_sigma2_.find(key);
    if (it == cp_sigma2_.end()) {
        it = cp_sigma2_.emplace(key, cp_variance(residuals)).first;
    }
    out.value = it->second > 0.0 ? criterion_value(Criterion::cp, T, out.s, rss, it->second) : inf;
    return out;
}

SelectionReport SelectionContext::select(Criterion criterion, Variant variant,
                                         std::optional<std::size_t> k_start) {
    const std::size_t k1 = k_start.value_or(default_k_start(variant));
    const std::size_t step = variant_step(variant);
    const std::size_t universe = window_->universe();
    if (k1 == 0) {
        throw ConfigError("k_start must be positive");
    }
    if (k1 > universe) {
        throw ShortageError(universe, k1, "selection window " + format_date(window_->window().first));
    }

    SelectionReport report;
    report.criterion = criterion;
    report.variant = variant;
    report.window = window_->window();
    report.k_start = k1;
    report.universe = universe;
    report.density_floor = options_.density_floor;
    if (criterion == Criterion::aic) {
        report.bandwidth = base(k1).model->bandwidth();
    }

    report.candidates.push_back(score(criterion, k1, k1, k1));
    const bool global = variant == Variant::step1_global;
    // The closed-form criteria need s < T; the scan ends where they stop being defined.
    const std::size_t t = window_->dates().size() - 1;
    const std::size_t k_max =
        criterion == Criterion::aic ? universe : std::min(universe, k1 + t - 1);
    for (std::size_t k = k1 + step; k <= k_max; k += step) {
        report.candidates.push_back(score(criterion, k1, k - step, k));
        if (!global) {
            const auto& prev = report.candidates[report.candidates.size() - 2];
            if (!(report.candidates.back().value < prev.value)) {
                report.chosen_k = prev.k;
                report.stop_reason = StopReason::local_rise;
                return report;
            }
        }
    }
    if (global) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < report.candidates.size(); ++i) {
            if (report.candidates[i].value < report.candidates[best].value) {
                best = i;
            }
        }
        report.chosen_k = report.candidates[best].k;
        report.stop_reason = StopReason::global_minimum;
    } else {
        report.chosen_k = report.candidates.back().k;
        report.stop_reason = StopReason::universe_exhausted;
    }
    return report;
}

SelectionReport select_k(const MarketPanel& panel, DateRange window, RankScheme ordering,
                         const WeightScheme& weights, Criterion criterion, Variant variant,
                         std::size_t k_start, const SelectionOptions& options) {
    SelectionContext ctx(std::make_shared<const SelectionWindow>(panel, window, ordering, weights),
                         options);
    return ctx.select(criterion, variant, k_start);
}

CapRatioComparison cap_ratio_probe(const SelectionWindow& window, std::size_t k_base,
                                  const std::string& candidate_a, const std::string& candidate_b,
                                  bool estimate, const SelectionOptions& options) {
    const auto ra = window.rank_of(candidate_a);
    const auto rb = window.rank_of(candidate_b);
    if (!ra || !rb) {
        throw ArgumentError("probe candidates must be eligible in the window");
    }
    if (*ra < k_base || *rb < k_base) {
        throw ArgumentError("probe candidates must lie outside the base basket");
    }
    std::vector<double> base;
    if (!window.residuals(k_base, {}, base)) {
        throw NumericError("base basket not positive in window");
    }
    if (is_constant(base)) {
        throw DegenerateSampleError("probe base residuals are constant");
    }
    const KdeModel model(base, options.bandwidth.value_or(sj_bandwidth(base)));
    const double floor = options.density_floor;
    const double base_aic = quantize(-2.0 * kde_loglik(model, base, floor).value);

    std::vector<double> scratch;
    auto delta = [&](std::size_t rank, double& beta_out) {
        const std::size_t extra[] = {rank};
        auto neg_ll = [&](const std::vector<double>& beta) {
            if (!window.residuals_with(k_base, extra, beta, scratch)) {
                return inf;
            }
            return -kde_loglik(model, scratch, floor).value;
        };
        std::vector<double> beta{1.0};
        if (estimate) {
            beta = optim::nelder_mead(neg_ll, beta).x;
        }
        beta_out = beta.front();
        return quantize(2.0 * neg_ll(beta)) + 2.0 - base_aic;
    };
    CapRatioComparison out;
    out.delta_a = delta(*ra, out.beta_a);
    out.delta_b = delta(*rb, out.beta_b);
    return out;
}

}  // namespace crix
