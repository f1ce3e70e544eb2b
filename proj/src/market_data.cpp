#include "crix/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "crix/errors.hpp"

namespace crix {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(std::string_view text, std::size_t row, const char* what) {
    if (text.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw ParseError(row, fmt::format("cannot parse {} '{}'", what, text));
    }
    return value;
}

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

}  // namespace

MarketPanel::MarketPanel(Date first_day, std::size_t days, std::vector<std::string> assets)
    : assets_(std::move(assets)),
      price_(days * assets_.size(), nan_value),
      cap_(days * assets_.size(), nan_value),
      volume_(days * assets_.size(), nan_value) {
    dates_.reserve(days);
    for (std::size_t t = 0; t < days; ++t) {
        dates_.push_back(first_day + std::chrono::days{static_cast<int>(t)});
    }
}

bool MarketPanel::covers(Date d) const noexcept {
    return !dates_.empty() && d >= dates_.front() && d <= dates_.back();
}

std::size_t MarketPanel::date_index(Date d) const {
    if (!covers(d)) {
        throw ArgumentError(fmt::format("date {} outside panel", format_date(d)));
    }
    return static_cast<std::size_t>((d - dates_.front()).count());
}

std::optional<std::size_t> MarketPanel::asset_index(const std::string& id) const {
    const auto it = std::find(assets_.begin(), assets_.end(), id);
    if (it == assets_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - assets_.begin());
}

std::size_t MarketPanel::require_asset(const std::string& id) const {
    auto idx = asset_index(id);
    if (!idx) {
        throw ArgumentError(fmt::format("unknown asset '{}'", id));
    }
    return *idx;
}

double MarketPanel::value(Field f, std::size_t t, std::size_t a) const {
    switch (f) {
    case Field::price:
        return price(t, a);
    case Field::market_cap:
        return market_cap(t, a);
    case Field::volume:
        return volume(t, a);
    }
    return nan_value;
}

bool MarketPanel::missing(std::size_t t, std::size_t a) const {
    return std::isnan(price_[t * assets_.size() + a]);
}

double MarketPanel::quantity(std::size_t t, std::size_t a) const {
    return market_cap(t, a) / price(t, a);
}

void MarketPanel::set(std::size_t t, std::size_t a, double price, double market_cap,
                      double volume) {
    if (!(price > 0.0) || !std::isfinite(price)) {
        throw IntegrityError(fmt::format("non-positive price for {} on {}", assets_[a],
                                         format_date(dates_[t])));
    }
    if (!(market_cap >= 0.0) || !std::isfinite(market_cap)) {
        throw IntegrityError(fmt::format("negative market cap for {} on {}", assets_[a],
                                         format_date(dates_[t])));
    }
    if (!(volume >= 0.0) || !std::isfinite(volume)) {
        throw IntegrityError(fmt::format("negative volume for {} on {}", assets_[a],
                                         format_date(dates_[t])));
    }
    const std::size_t i = t * assets_.size() + a;
    price_[i] = price;
    cap_[i] = market_cap;
    volume_[i] = volume;
}

void MarketPanel::clear(std::size_t t, std::size_t a) {
    const std::size_t i = t * assets_.size() + a;
    price_[i] = cap_[i] = volume_[i] = nan_value;
}

bool operator==(const MarketPanel& lhs, const MarketPanel& rhs) {
    if (lhs.dates_ != rhs.dates_ || lhs.assets_ != rhs.assets_) {
        return false;
    }
    // Bitwise comparison so that NaN markers compare equal.
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
        return std::equal(x.begin(), x.end(), y.begin(), y.end(), [](double a, double b) {
            return (std::isnan(a) && std::isnan(b)) || a == b;
        });
    };
    return same(lhs.price_, rhs.price_) && same(lhs.cap_, rhs.cap_) &&
           same(lhs.volume_, rhs.volume_);
}

MarketPanel read_panel_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(1, "missing header");
    }
    strip_cr(line);
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ParseError(1, fmt::format("column '{}' not found in header", name));
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_date = column(schema.date);
    const std::size_t c_asset = column(schema.asset);
    const std::size_t c_price = column(schema.price);
    const std::size_t c_cap = column(schema.market_cap);
    const std::size_t c_vol = column(schema.volume);

    struct Row {
        std::size_t line;
        Date date;
        std::string asset;
        std::optional<double> price, cap, volume;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError(line_no, fmt::format("expected {} fields, found {}", header.size(),
                                                  fields.size()));
        }
        Row row{line_no, {}, std::string(fields[c_asset]), {}, {}, {}};
        try {
            row.date = parse_date(fields[c_date]);
        } catch (const ArgumentError& e) {
            throw ParseError(line_no, e.what());
        }
        if (row.asset.empty()) {
            throw ParseError(line_no, "empty asset identifier");
        }
        row.price = parse_number(fields[c_price], line_no, "price");
        row.cap = parse_number(fields[c_cap], line_no, "market_cap");
        row.volume = parse_number(fields[c_vol], line_no, "volume");
        if (row.price && *row.price <= 0.0) {
            throw IntegrityError(fmt::format("row {}: non-positive price {}", line_no,
                                             fields[c_price]));
        }
        if (row.cap && *row.cap < 0.0) {
            throw IntegrityError(fmt::format("row {}: negative market cap", line_no));
        }
        if (row.volume && *row.volume < 0.0) {
            throw IntegrityError(fmt::format("row {}: negative volume", line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParseError(line_no, "no data rows");
    }

    std::vector<std::string> assets;
    Date lo = rows.front().date;
    Date hi = rows.front().date;
    for (const auto& r : rows) {
        assets.push_back(r.asset);
        lo = std::min(lo, r.date);
        hi = std::max(hi, r.date);
    }
    std::sort(assets.begin(), assets.end());
    assets.erase(std::unique(assets.begin(), assets.end()), assets.end());

    MarketPanel panel(lo, static_cast<std::size_t>((hi - lo).count()) + 1, assets);
    std::map<std::string, std::size_t> column_of;
    for (std::size_t a = 0; a < assets.size(); ++a) {
        column_of[assets[a]] = a;
    }
    std::vector<std::size_t> seen(panel.n_dates() * assets.size(), 0);
    for (const auto& r : rows) {
        const std::size_t t = panel.date_index(r.date);
        const std::size_t a = column_of[r.asset];
        auto& first_line = seen[t * assets.size() + a];
        if (first_line != 0) {
            throw IntegrityError(fmt::format("row {}: duplicate cell ({}, {}) first seen on row {}",
                                             r.line, format_date(r.date), r.asset, first_line));
        }
        first_line = r.line;
        // A cell is usable only when all three fields are present.
        if (r.price && r.cap && r.volume) {
            panel.set(t, a, *r.price, *r.cap, *r.volume);
        }
    }
    return panel;
}

MarketPanel load_panel(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot open '{}'", path));
    }
    return read_panel_csv(in, schema);
}

void write_panel_csv(const MarketPanel& panel, std::ostream& out) {
    out << "date,asset,price,market_cap,volume\n";
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
        const std::string day = format_date(panel.dates()[t]);
        for (std::size_t a = 0; a < panel.n_assets(); ++a) {
            if (panel.missing(t, a)) {
                continue;
            }
            out << day << ',' << panel.assets()[a] << ',' << shortest(panel.price(t, a)) << ','
                << shortest(panel.market_cap(t, a)) << ',' << shortest(panel.volume(t, a))
                << '\n';
        }
    }
}

void write_panel(const MarketPanel& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(fmt::format("cannot write '{}'", path));
    }
    write_panel_csv(panel, out);
}

std::vector<std::size_t> EligibilityMask::eligible_assets() const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < eligible.size(); ++a) {
        if (eligible[a]) {
            out.push_back(a);
        }
    }
    return out;
}

std::pair<MarketPanel, EligibilityMask> apply_missing_policy(const MarketPanel& panel,
                                                             DateRange window, MissingMode mode) {
    if (window.days() == 0) {
        throw ArgumentError("empty missing-data window");
    }
    if (!panel.covers(window.first) || !panel.covers(window.last)) {
        throw ArgumentError(fmt::format("window {}..{} outside panel", format_date(window.first),
                                        format_date(window.last)));
    }
    MarketPanel out = panel;
    EligibilityMask mask{window, std::vector<bool>(panel.n_assets(), true), {}};
    const std::size_t t0 = panel.date_index(window.first);
    const std::size_t t1 = panel.date_index(window.last);

    auto fill_from_previous = [&](std::size_t t, std::size_t a) {
        out.set(t, a, out.price(t - 1, a), out.market_cap(t - 1, a), out.volume(t - 1, a));
        mask.filled.emplace(t, a);
    };

    for (std::size_t a = 0; a < panel.n_assets(); ++a) {
        bool observed = false;
        for (std::size_t t = t0; t <= t1; ++t) {
            observed = observed || panel.present(t, a);
        }
        if (!observed && mode == MissingMode::derivation) {
            mask.eligible[a] = false;
            continue;
        }
        if (mode == MissingMode::computation) {
            // Carry the last observation before the window into its first day.
            if (out.missing(t0, a)) {
                for (std::size_t t = t0; t-- > 0;) {
                    if (panel.present(t, a)) {
                        out.set(t0, a, panel.price(t, a), panel.market_cap(t, a),
                                panel.volume(t, a));
                        mask.filled.emplace(t0, a);
                        break;
                    }
                }
            }
            mask.eligible[a] = out.present(t0, a);
            for (std::size_t t = t0 + 1; t <= t1; ++t) {
                if (out.missing(t, a) && out.present(t - 1, a)) {
                    fill_from_previous(t, a);
                }
            }
            continue;
        }

        // derivation mode
        std::size_t t = t0;
        while (t <= t1) {
            if (panel.present(t, a)) {
                ++t;
                continue;
            }
            std::size_t run_end = t;
            while (run_end + 1 < panel.n_dates() && panel.missing(run_end + 1, a)) {
                ++run_end;
            }
            const bool has_predecessor = t > 0 && panel.present(t - 1, a);
            if (run_end == t && has_predecessor) {
                fill_from_previous(t, a);
            } else {
                mask.eligible[a] = false;
            }
            t = run_end + 1;
        }
    }
    return {std::move(out), std::move(mask)};
}

std::vector<std::size_t> rank_assets(const MarketPanel& panel, Date date, RankScheme scheme,
                                     std::size_t top, const std::vector<bool>* restrict_to) {
    const std::size_t t = panel.date_index(date);
    const Field field = scheme == RankScheme::market_cap ? Field::market_cap : Field::volume;
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < panel.n_assets(); ++a) {
        if (restrict_to != nullptr && !(*restrict_to)[a]) {
            continue;
        }
        if (panel.present(t, a)) {
            candidates.push_back(a);
        }
    }
    if (top != all_assets && candidates.size() < top) {
        throw ShortageError(candidates.size(), top, "ranking on " + format_date(date));
    }
    const auto& ids = panel.assets();
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t x, std::size_t y) {
        const double vx = panel.value(field, t, x);
        const double vy = panel.value(field, t, y);
        if (vx != vy) {
            return vx > vy;
        }
        return ids[x] < ids[y];
    });
    if (top != all_assets) {
        candidates.resize(top);
    }
    return candidates;
}

std::vector<std::string> rank_asset_ids(const MarketPanel& panel, Date date, RankScheme scheme,
                                        std::size_t top) {
    std::vector<std::string> out;
    for (std::size_t a : rank_assets(panel, date, scheme, top)) {
        out.push_back(panel.assets()[a]);
    }
    return out;
}

namespace {

// Lower-triangular factor of a positive semi-definite matrix; zero pivots
// (within tolerance) yield zero columns.
std::vector<std::vector<double>> psd_cholesky(const std::vector<std::vector<double>>& m) {
    const std::size_t n = m.size();
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i].size() != n) {
            throw ArgumentError("covariance matrix is not square");
        }
        scale = std::max(scale, std::abs(m[i][i]));
    }
    const double tol = 1e-12 * std::max(scale, 1e-300);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(m[i][j] - m[j][i]) > 1e-12 * std::max(1.0, scale)) {
                throw ArgumentError("covariance matrix is not symmetric");
            }
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j][j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= l[j][k] * l[j][k];
        }
        if (d < -tol) {
            throw ArgumentError("covariance matrix is not positive semi-definite");
        }
        if (d <= tol) {
            for (std::size_t i = j + 1; i < n; ++i) {
                double r = m[i][j];
                for (std::size_t k = 0; k < j; ++k) {
                    r -= l[i][k] * l[j][k];
                }
                if (std::abs(r) > std::sqrt(tol) * std::max(1.0, std::sqrt(scale))) {
                    throw ArgumentError("covariance matrix is not positive semi-definite");
                }
            }
            continue;
        }
        l[j][j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double r = m[i][j];
            for (std::size_t k = 0; k < j; ++k) {
                r -= l[i][k] * l[j][k];
            }
            l[i][j] = r / l[j][j];
        }
    }
    return l;
}

template <class T>
void require_size(const std::vector<T>& v, std::size_t n, const char* name, bool optional) {
    if ((optional && v.empty()) || v.size() == n) {
        return;
    }
    throw ArgumentError(fmt::format("{} has {} entries, expected {}", name, v.size(), n));
}

}  // namespace

MarketPanel synth_market(const SynthSpec& spec, std::uint64_t seed) {
    const std::size_t n = spec.asset_count;
    if (n == 0 || spec.days == 0) {
        throw ArgumentError("synthetic spec needs at least one asset and one day");
    }
    require_size(spec.cap_scales, n, "cap_scales", false);
    require_size(spec.initial_prices, n, "initial_prices", true);
    require_size(spec.drifts, n, "drifts", true);
    require_size(spec.turnover, n, "turnover", true);
    if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) {
        throw ArgumentError("missing_rate must lie in [0, 1)");
    }
    for (double c : spec.cap_scales) {
        if (!(c > 0.0)) {
            throw ArgumentError("cap_scales must be positive");
        }
    }

    // Return shock loadings: shock_t = load * z_t.
    std::vector<std::vector<double>> load;
    if (!spec.covariance.empty()) {
        if (spec.covariance.size() != n) {
            throw ArgumentError("covariance dimension does not match asset_count");
        }
        load = psd_cholesky(spec.covariance);
    } else if (!spec.factor_loadings.empty() || !spec.idio_vols.empty()) {
        // Idiosyncratic vols alone mean zero common factors.
        const bool factors = !spec.factor_loadings.empty();
        if (factors) {
            require_size(spec.factor_loadings, n, "factor_loadings", false);
        }
        require_size(spec.idio_vols, n, "idio_vols", false);
        const std::size_t f = factors ? spec.factor_loadings.front().size() : 0;
        load.assign(n, std::vector<double>(f + n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            if (factors && spec.factor_loadings[i].size() != f) {
                throw ArgumentError("ragged factor_loadings");
            }
            if (spec.idio_vols[i] < 0.0) {
                throw ArgumentError("idio_vols must be non-negative");
            }
            if (factors) {
                std::copy(spec.factor_loadings[i].begin(), spec.factor_loadings[i].end(),
                          load[i].begin());
            }
            load[i][f + i] = spec.idio_vols[i];
        }
    } else {
        throw ArgumentError("synthetic spec needs a covariance, factor loadings or idio_vols");
    }
    const std::size_t shocks = load.front().size();

    std::vector<std::string> ids;
    const int width = static_cast<int>(fmt::format("{}", n - 1).size());
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(fmt::format("A{:0{}}", i, width));
    }
    MarketPanel panel(spec.start, spec.days, ids);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<double> log_price(n, 0.0);  // cumulative log return
    std::vector<double> initial(n);
    std::vector<double> quantity(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p0 = spec.initial_prices.empty() ? 1.0 : spec.initial_prices[i];
        if (!(p0 > 0.0)) {
            throw ArgumentError("initial_prices must be positive");
        }
        initial[i] = p0;
        quantity[i] = spec.cap_scales[i] / p0;
    }
    std::vector<double> z(shocks);
    for (std::size_t t = 0; t < spec.days; ++t) {
        if (t > 0) {
            for (auto& v : z) {
                v = normal(rng);
            }
            for (std::size_t i = 0; i < n; ++i) {
                double shock = 0.0;
                for (std::size_t k = 0; k < shocks; ++k) {
                    shock += load[i][k] * z[k];
                }
                log_price[i] += (spec.drifts.empty() ? 0.0 : spec.drifts[i]) + shock;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double noise = spec.turnover_noise > 0.0 ? normal(rng) : 0.0;
            const double miss = uniform(rng);
            const double price = initial[i] * std::exp(log_price[i]);
            const double cap = price * quantity[i];
            const double base_turnover = spec.turnover.empty() ? 0.05 : spec.turnover[i];
            const double volume =
                cap * base_turnover * std::exp(spec.turnover_noise * noise);
            if (miss < spec.missing_rate) {
                continue;
            }
            panel.set(t, i, price, cap, volume);
        }
    }
    return panel;
}

SynthSpec synth_spec_from_json(const std::string& json_text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("synthetic spec: {}", e.what()));
    }
    SynthSpec spec;
    try {
        spec.asset_count = j.at("asset_count").get<std::size_t>();
        spec.days = j.at("days").get<std::size_t>();
        if (j.contains("start")) {
            spec.start = parse_date(j["start"].get<std::string>());
        }
        spec.cap_scales = j.at("cap_scales").get<std::vector<double>>();
        spec.initial_prices = j.value("initial_prices", std::vector<double>{});
        spec.drifts = j.value("drifts", std::vector<double>{});
        if (j.contains("vol_matrix")) {
            spec.covariance = j["vol_matrix"].get<std::vector<std::vector<double>>>();
        }
        spec.factor_loadings =
            j.value("factor_loadings", std::vector<std::vector<double>>{});
        spec.idio_vols = j.value("idio_vols", std::vector<double>{});
        spec.turnover = j.value("turnover", std::vector<double>{});
        spec.turnover_noise = j.value("turnover_noise", 0.0);
        spec.missing_rate = j.value("missing_rate", 0.0);
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("synthetic spec: {}", e.what()));
    }
    return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open synthetic spec '{}'", path));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return synth_spec_from_json(buffer.str());
}

}  // namespace crix
