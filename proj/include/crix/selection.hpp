// Constituent-count selection.
//
// Over a derivation window the eligible assets are ranked top-down and
// frozen (quantities and scheme weights taken on the window's first day).
// Candidate index k_j keeps the first k_{j-1} assets at their scheme weight
// and scales the next step's assets by free factors beta; its residual is the
// daily log-return gap to the total-market proxy over the same window:
//
//   e(k_j, beta)_t = r^TMI_t - r^cand_t
//
// Candidates are scored with AIC (likelihood from a kernel density fitted to
// the k_1 residuals) or with one of the RSS-based criteria, each penalised by
// s = k_j - k_1.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "crix/density.hpp"
#include "crix/garch.hpp"
#include "crix/index_engine.hpp"
#include "crix/market_data.hpp"

namespace crix {

enum class Criterion { aic, gc, gfc, sh, cp, fpe };
enum class Variant { step5_local, step1_local, step1_global };
enum class StopReason { local_rise, global_minimum, universe_exhausted };
enum class BetaObjective { likelihood, squared_error };

inline constexpr Criterion all_criteria[] = {Criterion::aic, Criterion::gc, Criterion::gfc,
                                             Criterion::sh,  Criterion::cp, Criterion::fpe};
inline constexpr Variant all_variants[] = {Variant::step5_local, Variant::step1_local,
                                           Variant::step1_global};

std::string_view to_string(Criterion c);
std::string_view to_string(Variant v);
std::string_view to_string(StopReason r);
Criterion parse_criterion(std::string_view text);
Variant parse_variant(std::string_view text);

std::size_t variant_step(Variant v);
std::size_t default_k_start(Variant v);

struct ResidualSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    std::size_t k = 0;
    std::size_t s = 0;          // penalised parameter count
    std::vector<double> beta;   // factors of the s trailing assets

    double rss() const;
    std::size_t length() const noexcept { return values.size(); }
};

/// Window data shared by every candidate of one review.
class SelectionWindow {
public:
    SelectionWindow(const MarketPanel& panel, DateRange window, RankScheme ordering,
                    const WeightScheme& weights);

    const DateRange& window() const noexcept { return window_; }
    const std::vector<Date>& dates() const noexcept { return dates_; }
    /// Eligible assets in top-down order.
    const std::vector<std::string>& ranked_ids() const noexcept { return ids_; }
    std::size_t universe() const noexcept { return ids_.size(); }
    std::optional<std::size_t> rank_of(const std::string& id) const;

    /// Total-market proxy log returns over the window.
    const std::vector<double>& market_returns() const noexcept { return market_returns_; }

    /// Residuals of the candidate made of the first `k_base` ranked assets at
    /// beta 1 plus the next beta.size() assets scaled by beta. Returns false
    /// (and leaves `out` unspecified) when the candidate basket is not
    /// positive on some day.
    bool residuals(std::size_t k_base, std::span<const double> beta,
                   std::vector<double>& out) const;

    /// Same with explicitly chosen extra assets (rank positions).
    bool residuals_with(std::size_t k_base, std::span<const std::size_t> extra,
                        std::span<const double> beta, std::vector<double>& out) const;

    /// Weighted value w_i * P_{i,t} of the asset at rank position `rank`.
    const std::vector<double>& asset_values(std::size_t rank) const { return values_[rank]; }

private:
    DateRange window_;
    std::vector<Date> dates_;
    std::vector<std::string> ids_;
    std::vector<std::vector<double>> values_;      // [rank][day]
    std::vector<std::vector<double>> cumulative_;  // [k][day] = sum of the first k ranks
    std::vector<double> market_returns_;
};

ResidualSeries candidate_residuals(const SelectionWindow& window, std::size_t k_base,
                                   std::size_t k_j, std::span<const double> beta);

ResidualSeries candidate_residuals(const MarketPanel& panel, DateRange window,
                                   RankScheme ordering, const WeightScheme& weights,
                                   std::size_t k_base, std::size_t k_j,
                                   std::span<const double> beta);

struct BetaEstimate {
    std::vector<double> beta;
    double objective = 0.0;  // minimised value: -loglik or RSS
    bool converged = false;
};

/// Factors for the `s` assets after `k_base`, maximising the kernel likelihood
/// under `model` (likelihood objective) or minimising the RSS. Derivative-free
/// search from beta = 1 (relative tolerance 1e-6, 500 iterations).
BetaEstimate estimate_beta(const SelectionWindow& window, std::size_t k_base, std::size_t s,
                           BetaObjective objective, const KdeModel* model = nullptr,
                           double floor = 1e-12);

BetaEstimate estimate_beta(const MarketPanel& panel, DateRange window, RankScheme ordering,
                           const WeightScheme& weights, std::size_t k_base, std::size_t s,
                           BetaObjective objective, double floor = 1e-12);

/// Closed-form criteria. `sigma2` is required for Cp only.
double criterion_value(Criterion criterion, const ResidualSeries& residuals,
                       std::optional<double> sigma2 = std::nullopt);
double criterion_value(Criterion criterion, std::size_t t, std::size_t s, double rss,
                       std::optional<double> sigma2 = std::nullopt);

struct AicResult {
    double value = 0.0;
    double bandwidth = 0.0;
    std::size_t floor_hits = 0;
};

/// -2 loglik(candidate | KDE(base, h)) + 2 s; h from sj_bandwidth when absent.
AicResult aic_value(const ResidualSeries& base, const ResidualSeries& candidate,
                    std::optional<double> bandwidth = std::nullopt, double floor = 1e-12);

/// Mallows' Cp variance: mean GARCH(1,1) conditional variance of the
/// residuals, or their mean square when the fit is unavailable or fails.
double cp_variance(std::span<const double> residuals);

struct CandidateScore {
    std::size_t k = 0;
    std::size_t s = 0;
    double value = 0.0;
    std::vector<double> beta;
    std::size_t floor_hits = 0;
};

struct SelectionReport {
    Criterion criterion = Criterion::aic;
    Variant variant = Variant::step5_local;
    DateRange window;
    std::size_t k_start = 0;
    std::size_t universe = 0;
    std::vector<CandidateScore> candidates;
    std::size_t chosen_k = 0;
    StopReason stop_reason = StopReason::local_rise;
    double bandwidth = 0.0;  // 0 when no density was used
    double density_floor = 0.0;

    const CandidateScore& chosen() const;
};

struct SelectionOptions {
    std::optional<double> bandwidth;  // absent: plug-in on the base residuals
    double density_floor = 1e-12;
};

/// Shared state for scoring many criteria and variants on one window;
/// beta estimates and Cp variances are cached by candidate.
class SelectionContext {
public:
    SelectionContext(std::shared_ptr<const SelectionWindow> window, SelectionOptions options = {});

    const SelectionWindow& window() const noexcept { return *window_; }
    const SelectionOptions& options() const noexcept { return options_; }

    SelectionReport select(Criterion criterion, Variant variant,
                           std::optional<std::size_t> k_start = std::nullopt);

    /// Score of candidate k_j = k_prev + step (k_prev == k_j for the first one).
    CandidateScore score(Criterion criterion, std::size_t k_first, std::size_t k_prev,
                         std::size_t k_j);

private:
    struct Base {
        std::vector<double> residuals;
        std::unique_ptr<KdeModel> model;
    };
    const Base& base(std::size_t k_first);
    const BetaEstimate& beta_for(BetaObjective objective, std::size_t k_first, std::size_t k_prev,
                                 std::size_t step);

    std::shared_ptr<const SelectionWindow> window_;
    SelectionOptions options_;
    std::map<std::size_t, Base> bases_;
    std::map<std::tuple<int, std::size_t, std::size_t, std::size_t>, BetaEstimate> betas_;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> cp_sigma2_;
};

SelectionReport select_k(const MarketPanel& panel, DateRange window, RankScheme ordering,
                         const WeightScheme& weights, Criterion criterion, Variant variant,
                         std::size_t k_start, const SelectionOptions& options = {});

struct CapRatioComparison {
    double delta_a = 0.0;  // AIC(base + a, 1) - AIC(base, 0)
    double delta_b = 0.0;
    double beta_a = 1.0;
    double beta_b = 1.0;
};

/// AIC change from adding asset a versus asset b to the top-`k_base` basket.
/// With `estimate` false the added asset enters with beta = 1.
CapRatioComparison cap_ratio_probe(const SelectionWindow& window, std::size_t k_base,
                                  const std::string& candidate_a, const std::string& candidate_b,
                                  bool estimate = true, const SelectionOptions& options = {});

}  // namespace crix
