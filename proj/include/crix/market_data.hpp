// Daily asset panel: ingestion, missing-data policy, ranking and a seeded
// factor-model generator used as a test substrate.
//
// Storage is a dense calendar grid (weekends included). Missing cells hold
// NaN in all three fields; a cell is either fully present or fully missing.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crix/date.hpp"

namespace crix {

enum class Field { price, market_cap, volume };

class MarketPanel {
public:
    MarketPanel() = default;

    /// Creates an all-missing panel over `days` consecutive calendar days.
    MarketPanel(Date first_day, std::size_t days, std::vector<std::string> assets);

    std::size_t n_dates() const noexcept { return dates_.size(); }
    std::size_t n_assets() const noexcept { return assets_.size(); }
    const std::vector<Date>& dates() const noexcept { return dates_; }
    const std::vector<std::string>& assets() const noexcept { return assets_; }

    Date first_date() const { return dates_.front(); }
    Date last_date() const { return dates_.back(); }
    bool covers(Date d) const noexcept;
    /// Row of `d`; throws ArgumentError when the date is outside the grid.
    std::size_t date_index(Date d) const;
    std::optional<std::size_t> asset_index(const std::string& id) const;
    /// Column of `id`; throws ArgumentError when unknown.
    std::size_t require_asset(const std::string& id) const;

    double price(std::size_t t, std::size_t a) const { return price_[t * assets_.size() + a]; }
    double market_cap(std::size_t t, std::size_t a) const { return cap_[t * assets_.size() + a]; }
    double volume(std::size_t t, std::size_t a) const { return volume_[t * assets_.size() + a]; }
    double value(Field f, std::size_t t, std::size_t a) const;

    bool present(std::size_t t, std::size_t a) const { return !missing(t, a); }
    bool missing(std::size_t t, std::size_t a) const;

    /// Q = market_cap / price; NaN when the cell is missing.
    double quantity(std::size_t t, std::size_t a) const;

    /// Writes a full cell. Validates the value invariants (price > 0, cap >= 0, volume >= 0).
    void set(std::size_t t, std::size_t a, double price, double market_cap, double volume);
    void clear(std::size_t t, std::size_t a);

    friend bool operator==(const MarketPanel& lhs, const MarketPanel& rhs);

private:
    std::vector<Date> dates_;
    std::vector<std::string> assets_;
    std::vector<double> price_;
    std::vector<double> cap_;
    std::vector<double> volume_;
};

struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const noexcept { return d >= first && d <= last; }
    std::size_t days() const noexcept {
        return last < first ? 0 : static_cast<std::size_t>((last - first).count()) + 1;
    }
};

/// Column names resolving the canonical fields in a CSV header.
struct CsvSchema {
    std::string date = "date";
    std::string asset = "asset";
    std::string price = "price";
    std::string market_cap = "market_cap";
    std::string volume = "volume";
};

MarketPanel load_panel(const std::string& path, const CsvSchema& schema = {});
MarketPanel read_panel_csv(std::istream& in, const CsvSchema& schema = {});

/// Canonical long-form CSV `date,asset,price,market_cap,volume`. Fully
/// missing cells are omitted; numbers are written in shortest round-trip form.
void write_panel_csv(const MarketPanel& panel, std::ostream& out);
void write_panel(const MarketPanel& panel, const std::string& path);

enum class MissingMode { derivation, computation };

struct EligibilityMask {
    DateRange window;
    std::vector<bool> eligible;
    std::set<std::pair<std::size_t, std::size_t>> filled;  // (date row, asset column)

    std::vector<std::size_t> eligible_assets() const;
};

/// LOCF repair of the panel inside `window`.
///
/// derivation:  isolated gaps (a single missing day with a present predecessor)
///              are filled; runs of two or more make the asset ineligible and
///              stay missing; an asset never observed in the window is ineligible.
/// computation: every gap with a prior observation is filled forward (including
///              from before the window); an asset with no usable value on the
///              window's first date is ineligible.
std::pair<MarketPanel, EligibilityMask> apply_missing_policy(const MarketPanel& panel,
                                                             DateRange window, MissingMode mode);

enum class RankScheme { market_cap, volume };

inline constexpr std::size_t all_assets = std::numeric_limits<std::size_t>::max();

/// Asset columns sorted by the scheme's value at `date`, descending; ties broken
/// by ascending identifier. `top == all_assets` returns every rankable asset.
/// When `restrict_to` is given only those columns are considered.
std::vector<std::size_t> rank_assets(const MarketPanel& panel, Date date, RankScheme scheme,
                                     std::size_t top,
                                     const std::vector<bool>* restrict_to = nullptr);

/// Identifier form of rank_assets.
std::vector<std::string> rank_asset_ids(const MarketPanel& panel, Date date, RankScheme scheme,
                                        std::size_t top);

struct SynthSpec {
    std::size_t asset_count = 0;
    std::size_t days = 0;
    Date start = parse_date("2014-04-01");
    std::vector<double> cap_scales;          // initial market cap per asset
    std::vector<double> initial_prices;      // optional, default 1.0
    std::vector<double> drifts;              // optional daily log drift, default 0
    // Either a full covariance of daily log returns ...
    std::vector<std::vector<double>> covariance;
    // ... or factor loadings [asset][factor] plus idiosyncratic vols.
    std::vector<std::vector<double>> factor_loadings;
    std::vector<double> idio_vols;
    std::vector<double> turnover;            // volume / market cap, default 0.05
    double turnover_noise = 0.0;             // lognormal sd on the daily turnover
    double missing_rate = 0.0;
    std::uint64_t seed = 0;
};

/// Seeded panel with constant per-asset quantities. Same spec and seed give
/// bit-identical panels. Throws ArgumentError for an inconsistent spec or a
/// covariance that is not positive semi-definite.
MarketPanel synth_market(const SynthSpec& spec, std::uint64_t seed);

SynthSpec synth_spec_from_json(const std::string& json_text);
SynthSpec load_synth_spec(const std::string& path);

}  // namespace crix
