#include "crix/pipeline.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "crix/errors.hpp"

namespace crix {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string_view g_module = "cli";

void enter(std::string_view module) { g_module = module; }

constexpr std::array<std::string_view, 7> weekday_names = {"sun", "mon", "tue", "wed",
                                                            "thu", "fri", "sat"};

std::string_view ordering_name(RankScheme s) {
    return s == RankScheme::market_cap ? "market_cap" : "volume";
}

std::string_view weighting_name(WeightKind k) {
    return k == WeightKind::market_cap ? "market_cap" : "liquidity";
}

RankScheme parse_ordering(const std::string& s) {
    if (s == "market_cap") {
        return RankScheme::market_cap;
    }
    if (s == "volume") {
        return RankScheme::volume;
    }
    throw ConfigError(fmt::format("unknown ordering '{}'", s));
}

WeightKind parse_weighting(const std::string& s) {
    if (s == "market_cap") {
        return WeightKind::market_cap;
    }
    if (s == "liquidity") {
        return WeightKind::liquidity;
    }
    throw ConfigError(fmt::format("unknown weighting '{}'", s));
}

std::chrono::weekday parse_weekday(const ordered_json& j) {
    if (j.is_number_unsigned() && j.get<unsigned>() < 7) {
        return std::chrono::weekday{j.get<unsigned>()};
    }
    if (j.is_string()) {
        std::string s = j.get<std::string>().substr(0, 3);
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        for (unsigned i = 0; i < weekday_names.size(); ++i) {
            if (weekday_names[i] == s) {
                return std::chrono::weekday{i};
            }
        }
    }
    throw ConfigError("calendar.weekday must be a weekday name or 0..6");
}

Date config_date(const ordered_json& j, const char* key) {
    try {
        return parse_date(j.get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    }
    out << content;
}

ordered_json selection_json(const SelectionReport& r) {
    ordered_json j;
    j["criterion"] = to_string(r.criterion);
    j["variant"] = to_string(r.variant);
    j["window_first"] = format_date(r.window.first);
    j["window_last"] = format_date(r.window.last);
    j["k_start"] = r.k_start;
    j["universe"] = r.universe;
    j["chosen_k"] = r.chosen_k;
    j["stop_reason"] = to_string(r.stop_reason);
    if (r.bandwidth > 0.0) {
        j["bandwidth"] = r.bandwidth;
    } else {
        j["bandwidth"] = nullptr;
    }
    j["density_floor"] = r.density_floor;
    auto& rows = j["candidates"] = ordered_json::array();
    for (const auto& c : r.candidates) {
        ordered_json row;
        row["k"] = c.k;
        row["s"] = c.s;
        row["value"] = c.value;  // non-finite values serialise as null
        row["beta"] = c.beta;
        row["floor_hits"] = c.floor_hits;
        rows.push_back(std::move(row));
    }
    return j;
}

std::string column_name(Variant v, Criterion c) {
    return fmt::format("{}/{}", to_string(v), to_string(c));
}

}  // namespace

std::string_view current_module() { return g_module; }

void RunConfig::validate() const {
    if (data.empty() && synth_spec.empty()) {
        throw ConfigError("config needs 'data' or 'synth_spec'");
    }
    if (start && end && *end < *start) {
        throw ConfigError("end precedes start");
    }
    if (k_start && *k_start == 0) {
        throw ConfigError("k_start must be positive");
    }
    if (!(starting_value > 0.0)) {
        throw ConfigError("starting_value must be positive");
    }
    if (bandwidth && !(*bandwidth > 0.0)) {
        throw ConfigError("bandwidth must be positive or \"auto\"");
    }
    if (!(density_floor > 0.0)) {
        throw ConfigError("density_floor must be positive");
    }
    if (weights.volume_days == 0) {
        throw ConfigError("volume_days must be positive");
    }
    calendar.validate();
}

RunConfig run_config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    if (j.contains("config") && j["config"].is_object()) {
        j = j["config"];
    }
    RunConfig c;
    try {
        const int version = j.value("schema_version", run_config_schema);
        if (version != run_config_schema) {
            throw ConfigError(fmt::format("unsupported config schema_version {}", version));
        }
        c.data = j.value("data", std::string{});
        c.synth_spec = j.value("synth_spec", std::string{});
        auto present = [&](const char* key) { return j.contains(key) && !j[key].is_null(); };
        if (present("seed")) {
            c.seed = j["seed"].get<std::uint64_t>();
        }
        if (present("start")) {
            c.start = config_date(j["start"], "start");
        }
        if (present("end")) {
            c.end = config_date(j["end"], "end");
        }
        c.ordering = parse_ordering(j.value("ordering", std::string{"market_cap"}));
        c.weights.kind = parse_weighting(j.value("weighting", std::string{"market_cap"}));
        c.weights.volume_days = j.value("volume_days", 1u);
        c.variant = parse_variant(j.value("variant", std::string{"step5-local"}));
        c.criterion = parse_criterion(j.value("criterion", std::string{"AIC"}));
        if (present("k_start")) {
            c.k_start = j["k_start"].get<std::size_t>();
        }
        if (present("calendar")) {
            const auto& cal = j["calendar"];
            const std::string rule = cal.value("rule", std::string{"month_end"});
            if (rule == "month_end") {
                c.calendar.rule = CompositionRule::month_end;
            } else if (rule == "nth_weekday") {
                c.calendar.rule = CompositionRule::nth_weekday;
            } else {
                throw ConfigError(fmt::format("unknown calendar rule '{}'", rule));
            }
            c.calendar.nth = cal.value("nth", c.calendar.nth);
            if (cal.contains("weekday")) {
                c.calendar.weekday = parse_weekday(cal["weekday"]);
            }
            c.calendar.month_step = cal.value("month_step", c.calendar.month_step);
            c.calendar.anchor_month = cal.value("anchor_month", c.calendar.anchor_month);
            c.calendar.review_every = cal.value("review_every", c.calendar.review_every);
            c.calendar.derivation_months =
                cal.value("derivation_months", c.calendar.derivation_months);
        }
        c.starting_value = j.value("starting_value", c.starting_value);
        if (present("bandwidth")) {
            const auto& bw = j["bandwidth"];
            if (bw.is_string()) {
                if (bw.get<std::string>() != "auto") {
                    throw ConfigError("bandwidth must be a number or \"auto\"");
                }
            } else {
                c.bandwidth = bw.get<double>();
            }
        }
        c.density_floor = j.value("density_floor", c.density_floor);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.reference_asset = j.value("reference_asset", std::string{});
        c.recalibrate = j.value("recalibrate", true);
    } catch (const ordered_json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config '{}'", path));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return run_config_from_json(buffer.str());
}

std::string run_config_json(const RunConfig& c) {
    ordered_json j;
    j["schema_version"] = run_config_schema;
    j["data"] = c.data;
    j["synth_spec"] = c.synth_spec;
    j["seed"] = c.seed ? ordered_json(*c.seed) : ordered_json(nullptr);
    j["start"] = c.start ? ordered_json(format_date(*c.start)) : ordered_json(nullptr);
    j["end"] = c.end ? ordered_json(format_date(*c.end)) : ordered_json(nullptr);
    j["ordering"] = ordering_name(c.ordering);
    j["weighting"] = weighting_name(c.weights.kind);
    j["volume_days"] = c.weights.volume_days;
    j["variant"] = to_string(c.variant);
    j["criterion"] = to_string(c.criterion);
    j["k_start"] = c.k_start ? ordered_json(*c.k_start) : ordered_json(nullptr);
    ordered_json cal;
    cal["rule"] = c.calendar.rule == CompositionRule::month_end ? "month_end" : "nth_weekday";
    cal["nth"] = c.calendar.nth;
    cal["weekday"] = weekday_names[c.calendar.weekday.c_encoding()];
    cal["month_step"] = c.calendar.month_step;
    cal["anchor_month"] = c.calendar.anchor_month;
    cal["review_every"] = c.calendar.review_every;
    cal["derivation_months"] = c.calendar.derivation_months;
    j["calendar"] = cal;
    j["starting_value"] = c.starting_value;
    j["bandwidth"] = c.bandwidth ? ordered_json(*c.bandwidth) : ordered_json("auto");
    j["density_floor"] = c.density_floor;
    j["output_dir"] = c.output_dir;
    j["reference_asset"] = c.reference_asset;
    j["recalibrate"] = c.recalibrate;
    return j.dump(2) + "\n";
}

MarketPanel load_input(const RunConfig& config) {
    enter("market_data");
    if (!config.data.empty()) {
        return load_panel(config.data);
    }
    const SynthSpec spec = load_synth_spec(config.synth_spec);
    return synth_market(spec, config.seed.value_or(spec.seed));
}

RunRange resolve_range(const MarketPanel& panel, const RunConfig& config) {
    enter("cli");
    if (panel.n_dates() == 0) {
        throw DataError("panel is empty");
    }
    const RunRange r{config.start.value_or(panel.first_date()),
                     config.end.value_or(panel.last_date())};
    if (r.start < panel.first_date()) {
        throw ConfigError(fmt::format("start {} precedes the data ({})", format_date(r.start),
                                      format_date(panel.first_date())));
    }
    if (r.end > panel.last_date() || r.end < r.start) {
        throw ConfigError(fmt::format("end {} outside the data ({})", format_date(r.end),
                                      format_date(panel.last_date())));
    }
    return r;
}

std::vector<Date> run_reviews(const MarketPanel& panel, const RunConfig& config) {
    const RunRange range = resolve_range(panel, config);
    enter("index_engine");
    auto all = config.calendar.review_dates(panel.first_date(), panel.first_date(), range.end);
    std::vector<Date> out;
    // Only the latest review at or before the start matters for the start count.
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i] >= range.end) {
            break;
        }
        if (all[i] <= range.start && i + 1 < all.size() && all[i + 1] <= range.start) {
            continue;
        }
        out.push_back(all[i]);
    }
    return out;
}

std::vector<std::pair<Date, SelectionContext>> selection_contexts(const MarketPanel& panel,
                                                                  const RunConfig& config) {
    const auto reviews = run_reviews(panel, config);
    enter("selection");
    std::vector<std::pair<Date, SelectionContext>> out;
    for (Date r : reviews) {
        auto window = std::make_shared<const SelectionWindow>(
            panel, config.calendar.derivation_window(r), config.ordering, config.weights);
        out.emplace_back(r, SelectionContext(std::move(window),
                                             SelectionOptions{config.bandwidth,
                                                              config.density_floor}));
    }
    return out;
}

std::vector<ReviewSelection> run_selection(std::vector<std::pair<Date, SelectionContext>>& contexts,
                                           const RunConfig& config, Criterion criterion,
                                           Variant variant) {
    enter("selection");
    std::vector<ReviewSelection> out;
    for (auto& [review, ctx] : contexts) {
        const std::size_t k1 =
            config.k_start ? *config.k_start
                           : std::min(default_k_start(variant), ctx.window().universe());
        out.push_back({review, ctx.select(criterion, variant, k1)});
    }
    return out;
}

KSchedule k_schedule(const RunConfig& config, Variant variant, Date start,
                     const std::vector<ReviewSelection>& selections) {
    KSchedule schedule;
    schedule.set(start, config.k_start.value_or(default_k_start(variant)));
    for (const auto& s : selections) {
        if (s.review <= start) {
            schedule.set(start, s.report.chosen_k);
        }
    }
    for (const auto& s : selections) {
        if (s.review > start) {
            schedule.set(s.review, s.report.chosen_k);
        }
    }
    return schedule;
}

IndexSeries run_total_market(const MarketPanel& panel, const RunConfig& config) {
    const RunRange range = resolve_range(panel, config);
    enter("index_engine");
    return total_market_index(panel, config.weights, config.calendar, range.start,
                              config.starting_value, range.end);
}

namespace {

IndexSeries build_with(const MarketPanel& panel, const RunConfig& config, Variant variant,
                       const std::vector<ReviewSelection>& selections) {
    const RunRange range = resolve_range(panel, config);
    enter("index_engine");
    KSchedule schedule = k_schedule(config, variant, range.start, selections);
    if (!config.k_start) {
        // The default start count never asks for more assets than are priced.
        const std::size_t available =
            rank_assets(panel, range.start, config.ordering, all_assets).size();
        schedule.set(range.start, std::min(schedule.k_for(range.start), available));
    }
    return build_index_series(panel, config.ordering, config.weights, schedule,
                              config.calendar, range.start, config.starting_value, range.end);
}

}  // namespace

BuildResult run_build(const MarketPanel& panel, const RunConfig& config) {
    auto contexts = selection_contexts(panel, config);
    BuildResult out;
    out.selections = run_selection(contexts, config, config.criterion, config.variant);
    out.series = build_with(panel, config, config.variant, out.selections);
    return out;
}

CompareResult run_compare(const MarketPanel& panel, const RunConfig& config,
                          const std::vector<Variant>& variants,
                          const std::vector<Criterion>& criteria, bool include_tmi) {
    if (variants.empty() || criteria.empty()) {
        throw ConfigError("compare needs at least one variant and one criterion");
    }
    auto contexts = selection_contexts(panel, config);
    CompareResult out;
    for (const auto& [review, ctx] : contexts) {
        out.reviews.push_back(review);
    }
    const IndexSeries tmi = run_total_market(panel, config);
    for (Variant v : variants) {
        for (Criterion c : criteria) {
            CompareCell cell{v, c, {}, run_selection(contexts, config, c, v)};
            const IndexSeries series = build_with(panel, config, v, cell.selections);
            enter("evaluation");
            cell.evaluation = evaluate(series, tmi, config.recalibrate);
            out.cells.push_back(std::move(cell));
        }
    }
    if (include_tmi) {
        enter("evaluation");
        out.tmi = evaluate(tmi, tmi, config.recalibrate);
    }
    return out;
}

std::string selection_report_json(const SelectionReport& report) {
    return selection_json(report).dump(2) + "\n";
}

std::string levels_csv(const IndexSeries& series) {
    std::string out = "date,level\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += fmt::format("{},{}\n", format_date(series.dates[i]), series.levels[i]);
    }
    return out;
}

std::string composition_json(const IndexSeries& series) {
    ordered_json j = ordered_json::array();
    for (const auto& s : series.states) {
        ordered_json state;
        state["frozen_at"] = format_date(s.frozen_at);
        state["divisor"] = s.divisor;
        state["k"] = s.size();
        auto& members = state["constituents"] = ordered_json::array();
        for (std::size_t i = 0; i < s.size(); ++i) {
            members.push_back(
                {{"asset", s.constituents[i]}, {"quantity", s.quantities[i]}, {"beta", s.betas[i]}});
        }
        j.push_back(std::move(state));
    }
    return j.dump(2) + "\n";
}

std::vector<std::string> write_selections(const RunConfig& config,
                                          const std::vector<ReviewSelection>& selections) {
    enter("cli");
    std::vector<std::string> files;
    std::string table = "review,window_first,universe,chosen_k,stop_reason\n";
    for (const auto& s : selections) {
        const std::string name = fmt::format("selection/{}.json", format_date(s.review));
        write_file(std::filesystem::path(config.output_dir) / name,
                   selection_report_json(s.report));
        files.push_back(name);
        table += fmt::format("{},{},{},{},{}\n", format_date(s.review),
                             format_date(s.report.window.first), s.report.universe,
                             s.report.chosen_k, to_string(s.report.stop_reason));
    }
    write_file(std::filesystem::path(config.output_dir) / "k_schedule.csv", table);
    files.push_back("k_schedule.csv");
    return files;
}

std::vector<std::string> write_build(const RunConfig& config, const BuildResult& result) {
    auto files = write_selections(config, result.selections);
    const std::filesystem::path dir(config.output_dir);
    write_file(dir / "levels.csv", levels_csv(result.series));
    write_file(dir / "composition.json", composition_json(result.series));
    files.push_back("levels.csv");
    files.push_back("composition.json");
    return files;
}

std::vector<std::string> write_compare(const RunConfig& config, const CompareResult& result,
                                       const std::vector<Variant>& variants,
                                       const std::vector<Criterion>& criteria) {
    enter("cli");
    const std::filesystem::path dir(config.output_dir);
    auto find = [&](Variant v, Criterion c) -> const CompareCell& {
        for (const auto& cell : result.cells) {
            if (cell.variant == v && cell.criterion == c) {
                return cell;
            }
        }
        throw ArgumentError("missing compare cell");
    };
    std::string header = "variant";
    for (Criterion c : criteria) {
        header += fmt::format(",{}", to_string(c));
    }
    header += "\n";
    std::string mse = header;
    std::string mda = header;
    for (Variant v : variants) {
        mse += to_string(v);
        mda += to_string(v);
        for (Criterion c : criteria) {
            const auto& e = find(v, c).evaluation;
            mse += fmt::format(",{}", e.mean_mse);
            mda += fmt::format(",{}", e.mean_mda);
        }
        mse += "\n";
        mda += "\n";
    }
    if (result.tmi) {
        mse += "tmi";
        mda += "tmi";
        for (std::size_t i = 0; i < criteria.size(); ++i) {
            mse += fmt::format(",{}", result.tmi->mean_mse);
            mda += fmt::format(",{}", result.tmi->mean_mda);
        }
        mse += "\n";
        mda += "\n";
    }

    std::string k_table = "review";
    for (Variant v : variants) {
        for (Criterion c : criteria) {
            k_table += "," + column_name(v, c);
        }
    }
    k_table += "\n";
    for (std::size_t r = 0; r < result.reviews.size(); ++r) {
        k_table += format_date(result.reviews[r]);
        for (Variant v : variants) {
            for (Criterion c : criteria) {
                k_table += fmt::format(",{}", find(v, c).selections[r].report.chosen_k);
            }
        }
        k_table += "\n";
    }
    write_file(dir / "compare_mse.csv", mse);
    write_file(dir / "compare_mda.csv", mda);
    write_file(dir / "k_table.csv", k_table);
    return {"compare_mse.csv", "compare_mda.csv", "k_table.csv"};
}

std::vector<std::string> write_report(const RunConfig& config, const EvaluationReport& report) {
    enter("cli");
    const std::filesystem::path dir(config.output_dir);
    std::ostringstream monthly;
    write_monthly_csv(report, monthly);
    write_file(dir / "report_monthly.csv", monthly.str());
    write_file(dir / "report.json", report_json(report));
    std::string weights = "period,k,reference,remainder\n";
    for (const auto& w : report.weights) {
        weights += fmt::format("{},{},{},{}\n", format_date(w.period), w.k, w.reference,
                               w.remainder);
    }
    write_file(dir / "weights.csv", weights);
    return {"report_monthly.csv", "report.json", "weights.csv"};
}

void write_manifest(const RunConfig& config, std::string_view command, const MarketPanel& panel,
                    std::vector<std::string> outputs) {
    enter("cli");
    std::sort(outputs.begin(), outputs.end());
    ordered_json j;
    j["schema_version"] = run_config_schema;
    j["tool"] = "crix";
    j["version"] = crix_version;
    j["command"] = command;
    j["config"] = ordered_json::parse(run_config_json(config));
    // Where the outputs land is not part of what they contain.
    j["config"].erase("output_dir");
    j["seed"] = config.seed ? ordered_json(*config.seed) : ordered_json(nullptr);
    j["panel"] = {{"first", format_date(panel.first_date())},
                  {"last", format_date(panel.last_date())},
                  {"dates", panel.n_dates()},
                  {"assets", panel.n_assets()}};
    j["outputs"] = outputs;
    write_file(std::filesystem::path(config.output_dir) / "manifest.json", j.dump(2) + "\n");
}

}  // namespace crix
