// Run configuration and the end-to-end jobs behind the command line tool.
//
// A run reads (or generates) a panel, runs the k selection on every review
// window, builds the index with the chosen counts and writes its artifacts.
// Every output is a pure function of the resolved configuration.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crix/calendar.hpp"
#include "crix/evaluation.hpp"
#include "crix/index_engine.hpp"
#include "crix/market_data.hpp"
#include "crix/selection.hpp"

namespace crix {

inline constexpr int run_config_schema = 1;
inline constexpr std::string_view crix_version = "0.1.0";

struct RunConfig {
    std::string data;        // panel CSV; empty when synthetic
    std::string synth_spec;  // synthetic spec path; used when `data` is empty
    std::optional<std::uint64_t> seed;
    std::optional<Date> start;
    std::optional<Date> end;
    RankScheme ordering = RankScheme::market_cap;
    WeightScheme weights;
    Variant variant = Variant::step5_local;
    Criterion criterion = Criterion::aic;
    std::optional<std::size_t> k_start;  // default: the variant's step
    RebalanceCalendar calendar;
    double starting_value = 1000.0;
    std::optional<double> bandwidth;  // absent: plug-in
    double density_floor = 1e-12;
    std::string output_dir = "out";
    std::string reference_asset;
    bool recalibrate = true;

    void validate() const;
};

/// Parses a config document. A run manifest is accepted too (its "config"
/// member is used). Throws ConfigError.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
/// Canonical JSON form; run_config_from_json(run_config_json(c)) == c.
std::string run_config_json(const RunConfig& config);

MarketPanel load_input(const RunConfig& config);

/// Module the pipeline was working in when the last error was raised.
std::string_view current_module();

struct ReviewSelection {
    Date review;
    SelectionReport report;
};

struct RunRange {
    Date start;
    Date end;
};

RunRange resolve_range(const MarketPanel& panel, const RunConfig& config);

/// Review dates used for a run: windows inside the panel, review before the
/// range end.
std::vector<Date> run_reviews(const MarketPanel& panel, const RunConfig& config);

/// One shared context per review window, reusable across criteria and variants.
std::vector<std::pair<Date, SelectionContext>> selection_contexts(const MarketPanel& panel,
                                                                  const RunConfig& config);

/// Selection for one criterion and variant on every review. Without an
/// explicit k_start the variant's default is capped at the window universe.
std::vector<ReviewSelection> run_selection(std::vector<std::pair<Date, SelectionContext>>& contexts,
                                           const RunConfig& config, Criterion criterion,
                                           Variant variant);

/// k in force from the range start (latest review at or before it, else the
/// start count) and from every later review.
KSchedule k_schedule(const RunConfig& config, Variant variant, Date start,
                     const std::vector<ReviewSelection>& selections);

struct BuildResult {
    IndexSeries series;
    std::vector<ReviewSelection> selections;
};

BuildResult run_build(const MarketPanel& panel, const RunConfig& config);

/// Total-market proxy matching the configured weighting.
IndexSeries run_total_market(const MarketPanel& panel, const RunConfig& config);

struct CompareCell {
    Variant variant;
    Criterion criterion;
    EvaluationReport evaluation;
    std::vector<ReviewSelection> selections;
};

struct CompareResult {
    std::vector<Date> reviews;
    std::vector<CompareCell> cells;
    std::optional<EvaluationReport> tmi;  // proxy scored against itself
};

CompareResult run_compare(const MarketPanel& panel, const RunConfig& config,
                          const std::vector<Variant>& variants,
                          const std::vector<Criterion>& criteria, bool include_tmi = false);

// Artifact writers. Each returns the file names written below output_dir.
std::vector<std::string> write_build(const RunConfig& config, const BuildResult& result);
std::vector<std::string> write_selections(const RunConfig& config,
                                          const std::vector<ReviewSelection>& selections);
std::vector<std::string> write_compare(const RunConfig& config, const CompareResult& result,
                                       const std::vector<Variant>& variants,
                                       const std::vector<Criterion>& criteria);
std::vector<std::string> write_report(const RunConfig& config, const EvaluationReport& report);
void write_manifest(const RunConfig& config, std::string_view command, const MarketPanel& panel,
                    std::vector<std::string> outputs);

std::string selection_report_json(const SelectionReport& report);
std::string levels_csv(const IndexSeries& series);
std::string composition_json(const IndexSeries& series);

}  // namespace crix
