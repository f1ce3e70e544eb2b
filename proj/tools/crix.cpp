// crix: build, select, compare and report dynamic indices from a panel.
//
// Exit status: 0 ok, 1 configuration or argument error, 2 data error,
// 3 numeric error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "crix/errors.hpp"
#include "crix/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string data;
    std::string synth_spec;
    std::optional<std::uint64_t> seed;
    std::string start;
    std::string end;
    std::string ordering;
    std::string weighting;
    std::string variant;
    std::string criterion;
    std::optional<std::size_t> k_start;
    std::string bandwidth;
    std::optional<double> density_floor;
    std::optional<double> starting_value;
    std::string out;
    std::string reference_asset;
    bool raw = false;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "Run configuration (JSON) or a previous manifest");
    cmd->add_option("--data", o.data, "Panel CSV");
    cmd->add_option("--synth-spec", o.synth_spec, "Synthetic panel spec (JSON)");
    cmd->add_option("--seed", o.seed, "Seed for the synthetic panel");
    cmd->add_option("--start", o.start, "First index day (YYYY-MM-DD)");
    cmd->add_option("--end", o.end, "Last index day (YYYY-MM-DD)");
    cmd->add_option("--ordering", o.ordering, "market_cap | volume");
    cmd->add_option("--weighting", o.weighting, "market_cap | liquidity");
    cmd->add_option("--variant", o.variant, "step5-local | step1-local | step1-global");
    cmd->add_option("--criterion", o.criterion, "AIC | GC | GFC | SH | Cp | FPE");
    cmd->add_option("--k-start", o.k_start, "First candidate count");
    cmd->add_option("--bandwidth", o.bandwidth, "auto or a positive number");
    cmd->add_option("--density-floor", o.density_floor, "Likelihood density floor");
    cmd->add_option("--starting-value", o.starting_value, "Index level on the start day");
    cmd->add_option("-o,--out", o.out, "Output directory");
}

crix::RunConfig resolve(const Overrides& o) {
    nlohmann::ordered_json j = o.config.empty()
                                   ? nlohmann::ordered_json::object()
                                   : nlohmann::ordered_json::parse(
                                         crix::run_config_json(crix::load_run_config(o.config)));
    auto set = [&](const char* key, const std::string& v) {
        if (!v.empty()) {
            j[key] = v;
        }
    };
    if (!o.data.empty()) {
        j["data"] = o.data;
        j["synth_spec"] = "";
    }
    if (!o.synth_spec.empty()) {
        j["synth_spec"] = o.synth_spec;
        j["data"] = "";
    }
    if (o.seed) {
        j["seed"] = *o.seed;
    }
    set("start", o.start);
    set("end", o.end);
    set("ordering", o.ordering);
    set("weighting", o.weighting);
    set("variant", o.variant);
    set("criterion", o.criterion);
    if (o.k_start) {
        j["k_start"] = *o.k_start;
    }
    if (!o.bandwidth.empty()) {
        if (o.bandwidth == "auto") {
            j["bandwidth"] = "auto";
        } else {
            try {
                j["bandwidth"] = std::stod(o.bandwidth);
            } catch (const std::exception&) {
                throw crix::ConfigError("--bandwidth must be 'auto' or a number");
            }
        }
    }
    if (o.density_floor) {
        j["density_floor"] = *o.density_floor;
    }
    if (o.starting_value) {
        j["starting_value"] = *o.starting_value;
    }
    set("output_dir", o.out);
    set("reference_asset", o.reference_asset);
    if (o.raw) {
        j["recalibrate"] = false;
    }
    return crix::run_config_from_json(j.dump());
}

int run(int argc, char** argv) {
    CLI::App app{"Dynamic index construction with data-driven constituent counts"};
    app.require_subcommand(1);

    std::string synth_spec_path;
    std::optional<std::uint64_t> synth_seed;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel CSV");
    synth->add_option("spec", synth_spec_path, "Synthetic panel spec (JSON)")->required();
    synth->add_option("--seed", synth_seed, "Seed (defaults to the spec's)");
    synth->add_option("-o,--out", synth_out, "Output CSV")->required();

    Overrides build_o;
    auto* build = app.add_subcommand("build", "Select k on every review and build the index");
    add_run_options(build, build_o);

    Overrides select_o;
    auto* select = app.add_subcommand("select", "Run the k selection on every review window");
    add_run_options(select, select_o);

    Overrides compare_o;
    std::vector<std::string> variant_names;
    std::vector<std::string> criterion_names;
    bool include_tmi = false;
    auto* compare =
        app.add_subcommand("compare", "Score variants and criteria against the total market");
    add_run_options(compare, compare_o);
    compare->add_option("--variants", variant_names, "Variants (default: all)");
    compare->add_option("--criteria", criterion_names, "Criteria (default: all)");
    compare->add_flag("--include-tmi", include_tmi, "Add the proxy scored against itself");
    compare->add_flag("--raw", compare_o.raw, "Score levels without recalibration");

    Overrides report_o;
    auto* report = app.add_subcommand("report", "Monthly tracking scores and weight shares");
    add_run_options(report, report_o);
    report->add_option("--reference-asset", report_o.reference_asset,
                       "Asset whose basket share is reported");
    report->add_flag("--raw", report_o.raw, "Score levels without recalibration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (synth->parsed()) {
        const crix::SynthSpec spec = crix::load_synth_spec(synth_spec_path);
        crix::write_panel(crix::synth_market(spec, synth_seed.value_or(spec.seed)), synth_out);
        return 0;
    }
    if (build->parsed()) {
        const auto config = resolve(build_o);
        const auto panel = crix::load_input(config);
        const auto result = crix::run_build(panel, config);
        crix::write_manifest(config, "build", panel, crix::write_build(config, result));
        return 0;
    }
    if (select->parsed()) {
        const auto config = resolve(select_o);
        const auto panel = crix::load_input(config);
        auto contexts = crix::selection_contexts(panel, config);
        const auto selections =
            crix::run_selection(contexts, config, config.criterion, config.variant);
        crix::write_manifest(config, "select", panel, crix::write_selections(config, selections));
        return 0;
    }
    if (compare->parsed()) {
        const auto config = resolve(compare_o);
        std::vector<crix::Variant> variants;
        for (const auto& v : variant_names) {
            variants.push_back(crix::parse_variant(v));
        }
        if (variants.empty()) {
            variants.assign(std::begin(crix::all_variants), std::end(crix::all_variants));
        }
        std::vector<crix::Criterion> criteria;
        for (const auto& c : criterion_names) {
            criteria.push_back(crix::parse_criterion(c));
        }
        if (criteria.empty()) {
            criteria.assign(std::begin(crix::all_criteria), std::end(crix::all_criteria));
        }
        const auto panel = crix::load_input(config);
        const auto result = crix::run_compare(panel, config, variants, criteria, include_tmi);
        crix::write_manifest(config, "compare", panel,
                             crix::write_compare(config, result, variants, criteria));
        return 0;
    }
    if (report->parsed()) {
        const auto config = resolve(report_o);
        const auto panel = crix::load_input(config);
        const auto built = crix::run_build(panel, config);
        const auto tmi = crix::run_total_market(panel, config);
        auto evaluation = crix::evaluate(built.series, tmi, config.recalibrate);
        if (!config.reference_asset.empty()) {
            evaluation.weights = crix::weight_report(panel, built.series, config.reference_asset);
        }
        auto files = crix::write_build(config, built);
        for (auto& f : crix::write_report(config, evaluation)) {
            files.push_back(std::move(f));
        }
        crix::write_manifest(config, "report", panel, std::move(files));
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    auto fail = [](int code, const char* kind, const std::exception& e) {
        std::cerr << fmt::format("crix: {} error in {}: {}\n", kind, crix::current_module(),
                                 e.what());
        return code;
    };
    try {
        return run(argc, argv);
    } catch (const crix::ConfigError& e) {
        return fail(1, "config", e);
    } catch (const crix::ArgumentError& e) {
        return fail(1, "argument", e);
    } catch (const crix::DataError& e) {
        return fail(2, "data", e);
    } catch (const crix::NumericError& e) {
        return fail(3, "numeric", e);
    } catch (const nlohmann::json::exception& e) {
        return fail(1, "config", e);
    } catch (const std::exception& e) {
        return fail(1, "unexpected", e);
    }
}
