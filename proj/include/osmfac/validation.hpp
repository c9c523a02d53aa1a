#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osmfac/error.hpp"
#include "osmfac/geo_stats.hpp"

namespace osmfac {

struct WhoFacility {
    std::string country;
    std::string name;
    std::string facility_type;
    std::optional<LatLon> location;
};

/// Column names in the WHO facility CSV.
struct WhoColumns {
    std::string country = "Country";
    std::string name = "Facility name";
    std::string facility_type = "Facility type";
    std::string lat = "Lat";
    std::string lon = "Long";
};

/// Rows with unparseable or out-of-range coordinates keep the row without a
/// location and count "who.bad_coordinates". ConfigError when the country
/// column is missing; other mapped columns are optional.
std::vector<WhoFacility> parse_who_csv(std::string_view csv, const WhoColumns& columns = {},
                                       WarningCounters* warnings = nullptr);

/// Folded alias -> canonical country name. Canonical names map to themselves.
class CountryAliases {
public:
    /// Columns: alias, country.
    static CountryAliases parse(std::string_view tsv);
    static const CountryAliases& builtin();

    std::optional<std::string> canonical(std::string_view name) const;

private:
    std::map<std::string, std::string, std::less<>> map_;
};

enum class ComparisonStatus : std::uint8_t { AtOrOver, Under };
std::string_view to_string(ComparisonStatus s) noexcept;

struct ComparisonRow {
    std::string country;
    std::uint64_t osm_clinics = 0;
    std::uint64_t who_clinics = 0;
    std::optional<double> ratio;  // osm / who, absent when who == 0
    ComparisonStatus status = ComparisonStatus::Under;
    std::uint64_t osm_clinics_keys_only = 0;
};

struct ComparisonResult {
    std::vector<ComparisonRow> rows;  // sorted by country
    std::map<std::string, std::uint64_t> unmatched_who;  // raw name -> rows
    std::set<std::string> unmatched_osm;
};

struct ComparisonOptions {
    /// When non-empty, only WHO rows whose facility type (folded) is listed count.
    std::vector<std::string> include_types;
};

/// One row per country present in either source; the missing side counts 0.
/// `osm` and `osm_keys_only` are per-country tallies (group = country name).
ComparisonResult compare_counts(std::span<const CountStats> osm, std::span<const CountStats> osm_keys_only,
                                std::span<const WhoFacility> who, const CountryAliases& aliases,
                                const ComparisonOptions& options = {});

}  // namespace osmfac
