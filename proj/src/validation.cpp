#include "osmfac/validation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "osmfac/builtin_data.hpp"
#include "osmfac/table_io.hpp"
#include "osmfac/text.hpp"

namespace osmfac {

namespace {

std::optional<double> parse_coordinate(std::string_view s) {
    s = text::trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::vector<WhoFacility> parse_who_csv(std::string_view csv, const WhoColumns& columns, WarningCounters* warnings) {
    const Table t = parse_csv(csv);
    const auto c_country = t.find_column(columns.country);
    if (!c_country) throw ConfigError("WHO CSV: missing country column '" + columns.country + "'");
    const auto c_name = t.find_column(columns.name);
    const auto c_type = t.find_column(columns.facility_type);
    const auto c_lat = t.find_column(columns.lat);
    const auto c_lon = t.find_column(columns.lon);

    std::vector<WhoFacility> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        WhoFacility f;
        f.country = std::string(text::trim(row[*c_country]));
        if (f.country.empty()) {
            warn(warnings, "who.empty_country");
            continue;
        }
        if (c_name) f.name = row[*c_name];
        if (c_type) f.facility_type = row[*c_type];
        if (c_lat && c_lon) {
            const auto lat = parse_coordinate(row[*c_lat]);
            const auto lon = parse_coordinate(row[*c_lon]);
            if (lat && lon && *lat >= -90 && *lat <= 90 && *lon >= -180 && *lon <= 180)
                f.location = LatLon{*lat, *lon};
            else if (!text::trim(row[*c_lat]).empty() || !text::trim(row[*c_lon]).empty())
                warn(warnings, "who.bad_coordinates");
        }
        out.push_back(std::move(f));
    }
    return out;
}

CountryAliases CountryAliases::parse(std::string_view tsv) {
    const Table t = parse_tsv(tsv);
    const std::size_t c_alias = t.column("alias"), c_country = t.column("country");
    CountryAliases a;
    for (const auto& row : t.rows) {
        a.map_[text::fold(text::trim(row[c_alias]))] = row[c_country];
        a.map_[text::fold(text::trim(row[c_country]))] = row[c_country];
    }
    return a;
}

const CountryAliases& CountryAliases::builtin() {
    static const CountryAliases aliases = parse(builtin::kCountryAliasesTsv);
    return aliases;
}

std::optional<std::string> CountryAliases::canonical(std::string_view name) const {
    auto it = map_.find(text::fold(text::trim(name)));
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

std::string_view to_string(ComparisonStatus s) noexcept {
    return s == ComparisonStatus::AtOrOver ? "AtOrOver" : "Under";
}

ComparisonResult compare_counts(std::span<const CountStats> osm, std::span<const CountStats> osm_keys_only,
                                std::span<const WhoFacility> who, const CountryAliases& aliases,
                                const ComparisonOptions& options) {
    ComparisonResult result;
    std::map<std::string, ComparisonRow> rows;
    auto row_for = [&rows](const std::string& country) -> ComparisonRow& {
        auto [it, inserted] = rows.try_emplace(country);
        if (inserted) it->second.country = country;
        return it->second;
    };

    auto add_osm = [&](std::span<const CountStats> stats, bool keys_only) {
        for (const CountStats& s : stats) {
            if (s.group == kUnassignedGroup) continue;
            const auto country = aliases.canonical(s.group);
            if (!country) {
                result.unmatched_osm.insert(s.group);
                continue;
            }
            auto& row = row_for(*country);
            (keys_only ? row.osm_clinics_keys_only : row.osm_clinics) += s.clinics;
        }
    };
    add_osm(osm, false);
    add_osm(osm_keys_only, true);

    std::vector<std::string> types;
    for (const auto& t : options.include_types) types.push_back(text::fold(text::trim(t)));
    for (const WhoFacility& f : who) {
        if (!types.empty() &&
            std::find(types.begin(), types.end(), text::fold(text::trim(f.facility_type))) == types.end())
            continue;
        const auto country = aliases.canonical(f.country);
        if (!country) {
            ++result.unmatched_who[f.country];
            continue;
        }
        ++row_for(*country).who_clinics;
    }

    for (auto& [name, row] : rows) {
        if (row.who_clinics > 0)
            row.ratio = static_cast<double>(row.osm_clinics) / static_cast<double>(row.who_clinics);
        row.status = row.osm_clinics >= row.who_clinics ? ComparisonStatus::AtOrOver : ComparisonStatus::Under;
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace osmfac
