#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "osmfac/facility_classifier.hpp"
#include "osmfac/geo_stats.hpp"
#include "osmfac/validation.hpp"

namespace osmfac {

struct InputSpec {
    std::filesystem::path path;
    std::string country;  // group label; defaults to the file name up to the first '.'
};

/// Parses `path[=Label]`.
InputSpec parse_input_spec(std::string_view arg);

enum class StopAfter : std::uint8_t { Decode, Classify, Stats };

struct PipelineConfig {
    std::vector<InputSpec> inputs;
    std::optional<std::filesystem::path> admin_geojson;
    std::optional<std::filesystem::path> population_csv;
    // Built-in tables are used when these are unset.
    std::optional<std::filesystem::path> lexicon;
    std::optional<std::filesystem::path> key_schema;
    std::optional<std::filesystem::path> topic_rules;
    std::optional<std::filesystem::path> country_aliases;
    std::optional<std::filesystem::path> who_csv;
    WhoColumns who_columns;
    std::vector<std::string> who_include_types;
    std::filesystem::path output_dir;
    std::vector<std::int64_t> missing_thresholds{2, 10};
    int missing_level = 3;
    std::optional<int> table_precision;
    StopAfter stop_after = StopAfter::Stats;
    unsigned threads = 1;
};

/// Throws ConfigError when the config breaks its invariants.
void validate(const PipelineConfig& config);

enum ExitCode : int { kExitOk = 0, kExitInputError = 1, kExitConfigError = 2 };

/// Runs decode -> filter -> classify -> admin join -> statistics -> WHO
/// comparison and writes the output files. Nothing is written unless every
/// stage succeeds. Progress and errors go to `log`.
int run_pipeline(const PipelineConfig& config, std::ostream& log);

/// Output files, in the order they are written.
inline constexpr std::string_view kFacilitiesGeojson = "facilities.geojson";
inline constexpr std::string_view kUnlocatedCsv = "facilities_unlocated.csv";
inline constexpr std::string_view kProportionsCsv = "proportions.csv";
inline constexpr std::string_view kDensitiesCsv = "densities.csv";
inline constexpr std::string_view kAreaStatsCsv = "area_stats.csv";
inline constexpr std::string_view kMissingAreasCsv = "missing_areas.csv";
inline constexpr std::string_view kWhoComparisonCsv = "who_comparison.csv";
inline constexpr std::string_view kManifestJson = "manifest.json";

/// School and clinic records with a location, as a GeoJSON FeatureCollection.
std::string facilities_geojson(std::span<const FacilityRecord> records);

/// Table-1 shaped proportions (keys only) with a trailing Median row.
std::string proportions_csv(std::span<const CountStats> structured, std::optional<int> precision);

struct CountryDensityRow {
    std::string country;
    std::optional<std::uint64_t> population;
    CountStats structured;
    CountStats enriched;
};

/// Table-2 shaped per-100k densities, keys-only block then enriched block,
/// with a trailing Median row.
std::string densities_csv(std::span<const CountryDensityRow> rows, std::optional<int> precision);

std::string who_comparison_csv(const ComparisonResult& result, std::optional<int> precision);

/// Shortest round-trip text, or fixed `precision` decimals.
std::string format_number(double value, std::optional<int> precision);

}  // namespace osmfac
