#include "crix/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "crix/errors.hpp"

namespace crix {

namespace {

std::size_t require_index(const IndexSeries& s, Date d, const char* which) {
    const auto i = s.index_of(d);
    if (!i) {
        throw ArgumentError(fmt::format("{} series does not cover {}", which, format_date(d)));
    }
    return *i;
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

IndexSeries recalibrate(const IndexSeries& candidate, const IndexSeries& target,
                        const std::vector<Date>& dates) {
    if (candidate.dates.empty()) {
        throw ArgumentError("cannot recalibrate an empty series");
    }
    std::vector<Date> anchors(dates);
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    if (anchors.empty() || anchors.front() > candidate.dates.front()) {
        anchors.insert(anchors.begin(), candidate.dates.front());
    }

    IndexSeries out = candidate;
    for (std::size_t j = 0; j < anchors.size(); ++j) {
        const std::size_t from = require_index(candidate, anchors[j], "candidate");
        const double scale =
            target.levels[require_index(target, anchors[j], "target")] / candidate.levels[from];
        const std::size_t to = j + 1 < anchors.size()
                                   ? require_index(candidate, anchors[j + 1], "candidate")
                                   : candidate.size();
        for (std::size_t i = from; i < to; ++i) {
            out.levels[i] = candidate.levels[i] * scale;
        }
    }
    return out;
}

double monthly_mse(const IndexSeries& candidate, const IndexSeries& target, DateRange month) {
    if (month.days() == 0) {
        throw ArgumentError("empty month");
    }
    double sum = 0.0;
    for (Date d = month.first; d <= month.last; d += std::chrono::days{1}) {
        const double gap = candidate.levels[require_index(candidate, d, "candidate")] -
                           target.levels[require_index(target, d, "target")];
        sum += gap * gap;
    }
    return sum / static_cast<double>(month.days());
}

double monthly_mda(const IndexSeries& candidate, const IndexSeries& target, DateRange month) {
    if (month.days() == 0) {
        throw ArgumentError("empty month");
    }
    std::size_t agree = 0;
    for (Date d = month.first; d <= month.last; d += std::chrono::days{1}) {
        const std::size_t c = require_index(candidate, d, "candidate");
        const std::size_t t = require_index(target, d, "target");
        if (c == 0 || t == 0) {
            throw ArgumentError(fmt::format("no predecessor for {}", format_date(d)));
        }
        const int sc = sign(candidate.levels[c] - candidate.levels[c - 1]);
        const int st = sign(target.levels[t] - target.levels[t - 1]);
        agree += sc == st ? 1 : 0;
    }
    return static_cast<double>(agree) / static_cast<double>(month.days());
}

std::vector<DateRange> month_ranges(Date first, Date last) {
    std::vector<DateRange> out;
    for (Date d = first; d <= last;) {
        const Date end = std::min(last_day_of_month(d), last);
        out.push_back({d, end});
        d = end + std::chrono::days{1};
    }
    return out;
}

std::vector<WeightShare> weight_report(const MarketPanel& panel, const IndexSeries& series,
                                       const std::string& reference_asset,
                                       bool require_presence) {
    if (series.dates.empty()) {
        throw ArgumentError("empty series");
    }
    const auto [filled, mask] = apply_missing_policy(
        panel, {series.dates.front(), series.dates.back()}, MissingMode::computation);
    (void)mask;

    std::vector<WeightShare> out;
    bool seen = false;
    for (std::size_t p = 0; p < series.states.size(); ++p) {
        const IndexState& state = series.states[p];
        // A basket frozen on c prices (c, next c]; the first one also prices the start.
        const Date from = p == 0 ? series.dates.front() : state.frozen_at + std::chrono::days{1};
        const Date to = p + 1 < series.states.size() ? series.states[p + 1].frozen_at
                                                     : series.dates.back();
        const auto it =
            std::find(state.constituents.begin(), state.constituents.end(), reference_asset);
        const bool present = it != state.constituents.end();
        seen = seen || present;
        const std::size_t ref = static_cast<std::size_t>(it - state.constituents.begin());

        std::vector<std::size_t> cols;
        for (const auto& id : state.constituents) {
            cols.push_back(filled.require_asset(id));
        }
        WeightShare row{state.frozen_at, state.size(), 0.0, 0.0};
        std::size_t days = 0;
        for (Date d = from; d <= to; d += std::chrono::days{1}) {
            const std::size_t t = filled.date_index(d);
            double total = 0.0;
            double mine = 0.0;
            for (std::size_t i = 0; i < cols.size(); ++i) {
                const double v = state.betas[i] * state.quantities[i] * filled.price(t, cols[i]);
                total += v;
                if (present && i == ref) {
                    mine = v;
                }
            }
            row.reference += mine / total;
            ++days;
        }
        if (days > 0) {
            row.reference /= static_cast<double>(days);
        }
        row.remainder = 1.0 - row.reference;
        out.push_back(row);
    }
    if (require_presence && !seen) {
        throw ArgumentError(fmt::format("asset '{}' never enters the index", reference_asset));
    }
    return out;
}

EvaluationReport evaluate(const IndexSeries& candidate, const IndexSeries& target,
                          bool recalibrated) {
    if (candidate.size() < 2) {
        throw ArgumentError("evaluation needs at least two days");
    }
    const IndexSeries scored =
        recalibrated ? recalibrate(candidate, target, candidate.composition_dates()) : candidate;
    EvaluationReport report;
    for (const DateRange& month : month_ranges(candidate.dates[1], candidate.dates.back())) {
        report.months.push_back(
            {month.first, monthly_mse(scored, target, month), monthly_mda(scored, target, month)});
        report.mean_mse += report.months.back().mse;
        report.mean_mda += report.months.back().mda;
    }
    report.mean_mse /= static_cast<double>(report.months.size());
    report.mean_mda /= static_cast<double>(report.months.size());
    return report;
}

void write_monthly_csv(const EvaluationReport& report, std::ostream& out) {
    out << "month,mse,mda\n";
    for (const auto& m : report.months) {
        out << fmt::format("{},{},{}\n", format_date(m.month), m.mse, m.mda);
    }
}

std::string report_json(const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["mean_mse"] = report.mean_mse;
    j["mean_mda"] = report.mean_mda;
    auto& months = j["months"] = nlohmann::ordered_json::array();
    for (const auto& m : report.months) {
        months.push_back({{"month", format_date(m.month)}, {"mse", m.mse}, {"mda", m.mda}});
    }
    auto& weights = j["weights"] = nlohmann::ordered_json::array();
    for (const auto& w : report.weights) {
        weights.push_back({{"period", format_date(w.period)},
                           {"k", w.k},
                           {"reference", w.reference},
                           {"remainder", w.remainder}});
    }
    return j.dump(2) + "\n";
}

}  // namespace crix
