#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osmfac/element.hpp"
#include "osmfac/error.hpp"
#include "osmfac/facility_classifier.hpp"

namespace osmfac {

// Planar geometry on (lon, lat) throughout.

using Ring = std::vector<LatLon>;

/// Area centroid of a closed ring (first == last, >= 4 vertices). Rings with
/// |signed area| below 1e-14 square degrees fall back to the mean of their
/// distinct vertices. ContractError for open or short rings.
LatLon centroid(std::span<const LatLon> ring);

/// Even-odd rule over all rings; points on an edge or vertex are inside.
bool point_in_polygon(LatLon point, std::span<const Ring> rings);

struct BoundingBox {
    double min_lat = 0, min_lon = 0, max_lat = 0, max_lon = 0;
    bool contains(LatLon p) const noexcept {
        return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
    }
    double area() const noexcept { return (max_lat - min_lat) * (max_lon - min_lon); }
};

struct AdminArea {
    std::string id;
    int level = 0;  // 0 = country .. 3
    std::string name;
    std::vector<Ring> rings;
    std::uint64_t population = 0;
    BoundingBox bbox;  // filled by make_admin_area

    friend bool operator==(const AdminArea& a, const AdminArea& b) { return a.id == b.id; }
};

/// Validates the rings (closed, >= 4 vertices) and the level, computes the bbox.
AdminArea make_admin_area(std::string id, int level, std::string name, std::vector<Ring> rings,
                          std::uint64_t population);

/// GeoJSON FeatureCollection of Polygon/MultiPolygon features with properties
/// id, level, name and optional population.
std::vector<AdminArea> parse_admin_geojson(std::string_view json);
std::vector<AdminArea> load_admin_geojson(const std::filesystem::path& path);

/// CSV with columns area_id, population; overrides the GeoJSON values.
/// Unknown ids count as "admin.population_unknown_area".
void apply_population_csv(std::vector<AdminArea>& areas, std::string_view csv, WarningCounters* warnings = nullptr);

/// Indices into `areas` of the containing area per level. Overlaps at one
/// level go to the smallest bounding box and count "admin.overlap".
using AdminAssignment = std::array<std::optional<std::size_t>, kAdminLevels>;
AdminAssignment assign_admin(LatLon point, std::span<const AdminArea> areas, WarningCounters* warnings = nullptr);

inline constexpr std::string_view kUnassignedGroup = "unassigned";

struct CountStats {
    std::string group;
    std::uint64_t total = 0;
    std::uint64_t schools = 0;
    std::uint64_t clinics = 0;
    std::uint64_t unresolved = 0;
    std::uint64_t other = 0;

    void add(TopClass c, std::uint64_t n = 1);
    CountStats& operator+=(const CountStats& o);
    std::uint64_t count(TopClass c) const noexcept;
    friend bool operator==(const CountStats&, const CountStats&) = default;
};

struct Grouping {
    enum class Kind { Country, AdminLevel } kind = Kind::Country;
    int level = 0;

    static Grouping country() { return {Kind::Country, 0}; }
    static Grouping admin_level(int level) { return {Kind::AdminLevel, level}; }
};

/// Which class of a record is counted: keys only, or after text enrichment.
enum class Stage : std::uint8_t { Structured, Enriched };

/// Per-group counts sorted by group id, the unassigned group last.
std::vector<CountStats> tally(std::span<const FacilityRecord> records, Grouping grouping, Stage stage);

/// Field-wise sum of shards, keyed by group.
std::vector<CountStats> merge_tallies(std::span<const std::vector<CountStats>> shards);

struct Proportions {
    double schools = 0, clinics = 0, unresolved = 0, other = 0;
};

/// Percentages of total; ContractError when total is 0.
Proportions proportions(const CountStats& stats);

double round_to(double value, int decimals);

/// count * 100000 / population. ContractError naming `group` when population is 0.
double density_per_100k(std::uint64_t count, std::uint64_t population, std::string_view group = {});

struct DensityStats {
    std::string group;
    double total = 0, schools = 0, clinics = 0, unresolved = 0, other = 0;
};
DensityStats densities(const CountStats& stats, std::uint64_t population);

/// ContractError on empty input.
double median(std::span<const double> values);

/// Natural log; nullopt for non-positive density.
std::optional<double> log_density(double density);

struct AreaFlag {
    const AdminArea* area = nullptr;
    std::uint64_t total = 0;
    bool flagged = false;
};

/// Every area of `level` with its total from `stats` (group id = area id,
/// 0 when absent); flagged iff total <= threshold.
std::vector<AreaFlag> flag_missing(std::span<const AdminArea> areas, int level, std::span<const CountStats> stats,
                                   std::uint64_t threshold);

/// ContractError when nothing is flagged.
double mean_population_flagged(std::span<const AreaFlag> flags);

}  // namespace osmfac
