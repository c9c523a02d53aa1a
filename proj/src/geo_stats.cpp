#include "osmfac/geo_stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "osmfac/table_io.hpp"
#include "osmfac/text.hpp"

namespace osmfac {

namespace {

void check_ring(std::span<const LatLon> ring, std::string_view what) {
    if (ring.size() < 4) throw ContractError(std::string(what) + ": ring needs at least 4 vertices");
    if (!(ring.front() == ring.back())) throw ContractError(std::string(what) + ": ring is not closed");
}

bool on_segment(LatLon p, LatLon a, LatLon b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (cross != 0.0) return false;
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
           p.lat <= std::max(a.lat, b.lat);
}

std::uint64_t parse_population(std::string_view s, std::string_view context) {
    s = text::trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(std::string(context) + ": invalid population '" + std::string(s) + "'");
    return v;
}

Ring parse_ring(const nlohmann::json& coords) {
    Ring ring;
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
            throw Error("admin GeoJSON: position must be [lon, lat]");
        ring.push_back({pt[1].get<double>(), pt[0].get<double>()});
    }
    return ring;
}

std::string property_text(const nlohmann::json& props, const char* name) {
    if (!props.contains(name) || props[name].is_null()) return {};
    const auto& v = props[name];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    return v.dump();
}

}  // namespace

LatLon centroid(std::span<const LatLon> ring) {
    check_ring(ring, "centroid");
    // Shoelace on (x = lon, y = lat), relative to the first vertex.
    const LatLon origin = ring.front();
    double twice_area = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double x0 = ring[i].lon - origin.lon, y0 = ring[i].lat - origin.lat;
        const double x1 = ring[i + 1].lon - origin.lon, y1 = ring[i + 1].lat - origin.lat;
        const double cross = x0 * y1 - x1 * y0;
        twice_area += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if (std::abs(twice_area / 2.0) < 1e-14) {
        std::vector<LatLon> distinct;
        for (std::size_t i = 0; i + 1 < ring.size(); ++i)
            if (std::find(distinct.begin(), distinct.end(), ring[i]) == distinct.end()) distinct.push_back(ring[i]);
        LatLon mean{};
        for (const LatLon& p : distinct) {
            mean.lat += p.lat;
            mean.lon += p.lon;
        }
        mean.lat /= static_cast<double>(distinct.size());
        mean.lon /= static_cast<double>(distinct.size());
        return mean;
    }
    return {origin.lat + cy / (3.0 * twice_area), origin.lon + cx / (3.0 * twice_area)};
}

bool point_in_polygon(LatLon p, std::span<const Ring> rings) {
    bool inside = false;
    for (const Ring& ring : rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const LatLon a = ring[i], b = ring[i + 1];
            if (on_segment(p, a, b)) return true;
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (p.lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

AdminArea make_admin_area(std::string id, int level, std::string name, std::vector<Ring> rings,
                          std::uint64_t population) {
    if (level < 0 || level >= static_cast<int>(kAdminLevels))
        throw ContractError("admin area " + id + ": level " + std::to_string(level) + " outside 0..3");
    if (rings.empty()) throw ContractError("admin area " + id + ": no rings");
    AdminArea a{std::move(id), level, std::move(name), std::move(rings), population, {}};
    a.bbox = {a.rings[0][0].lat, a.rings[0][0].lon, a.rings[0][0].lat, a.rings[0][0].lon};
    for (const Ring& r : a.rings) {
        check_ring(r, "admin area " + a.id);
        for (const LatLon& p : r) {
            a.bbox.min_lat = std::min(a.bbox.min_lat, p.lat);
            a.bbox.max_lat = std::max(a.bbox.max_lat, p.lat);
            a.bbox.min_lon = std::min(a.bbox.min_lon, p.lon);
            a.bbox.max_lon = std::max(a.bbox.max_lon, p.lon);
        }
    }
    return a;
}

std::vector<AdminArea> parse_admin_geojson(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("admin GeoJSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw Error("admin GeoJSON: expected a FeatureCollection");

    std::vector<AdminArea> areas;
    std::set<std::string> seen;
    for (const auto& feature : doc["features"]) {
        const auto& props = feature.contains("properties") && feature["properties"].is_object()
                                ? feature["properties"]
                                : nlohmann::json::object();
        const std::string id = property_text(props, "id");
        if (id.empty()) throw Error("admin GeoJSON: feature without id");
        if (!seen.insert(id).second) throw Error("admin GeoJSON: duplicate id " + id);

        const std::string level_text = property_text(props, "level");
        int level = -1;
        std::from_chars(level_text.data(), level_text.data() + level_text.size(), level);

        std::uint64_t population = 0;
        if (props.contains("population") && !props["population"].is_null()) {
            const auto& pv = props["population"];
            if (pv.is_number_unsigned() || pv.is_number_integer()) {
                if (pv.get<std::int64_t>() < 0) throw Error("admin GeoJSON: negative population for " + id);
                population = pv.get<std::uint64_t>();
            } else if (pv.is_number_float()) {
                if (pv.get<double>() < 0) throw Error("admin GeoJSON: negative population for " + id);
                population = static_cast<std::uint64_t>(std::llround(pv.get<double>()));
            } else {
                population = parse_population(property_text(props, "population"), "admin GeoJSON " + id);
            }
        }

        if (!feature.contains("geometry") || !feature["geometry"].is_object())
            throw Error("admin GeoJSON: feature " + id + " has no geometry");
        const auto& geom = feature["geometry"];
        const std::string type = geom.value("type", "");
        std::vector<Ring> rings;
        if (!geom.contains("coordinates") || !geom["coordinates"].is_array())
            throw Error("admin GeoJSON: feature " + id + " has no coordinates");
        if (type == "Polygon") {
            for (const auto& r : geom["coordinates"]) rings.push_back(parse_ring(r));
        } else if (type == "MultiPolygon") {
            for (const auto& poly : geom["coordinates"])
                for (const auto& r : poly) rings.push_back(parse_ring(r));
        } else {
            throw Error("admin GeoJSON: feature " + id + " has unsupported geometry '" + type + "'");
        }
        try {
            areas.push_back(make_admin_area(id, level, property_text(props, "name"), std::move(rings), population));
        } catch (const ContractError& e) {
            throw Error(std::string("admin GeoJSON: ") + e.what());
        }
    }
    return areas;
}

std::vector<AdminArea> load_admin_geojson(const std::filesystem::path& path) {
    return parse_admin_geojson(read_file_text(path));
}

void apply_population_csv(std::vector<AdminArea>& areas, std::string_view csv, WarningCounters* warnings) {
    const Table t = parse_csv(csv);
    const std::size_t c_id = t.column("area_id"), c_pop = t.column("population");
    std::unordered_map<std::string, AdminArea*> by_id;
    for (AdminArea& a : areas) by_id[a.id] = &a;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto it = by_id.find(std::string(text::trim(row[c_id])));
        if (it == by_id.end()) {
            warn(warnings, "admin.population_unknown_area");
            continue;
        }
        it->second->population = parse_population(row[c_pop], "population CSV line " + std::to_string(t.row_lines[i]));
    }
}

AdminAssignment assign_admin(LatLon point, std::span<const AdminArea> areas, WarningCounters* warnings) {
    AdminAssignment out{};
    for (std::size_t i = 0; i < areas.size(); ++i) {
        const AdminArea& a = areas[i];
        if (!a.bbox.contains(point) || !point_in_polygon(point, a.rings)) continue;
        auto& slot = out[static_cast<std::size_t>(a.level)];
        if (!slot) {
            slot = i;
            continue;
        }
        warn(warnings, "admin.overlap");
        if (a.bbox.area() < areas[*slot].bbox.area()) slot = i;
    }
    return out;
}

void CountStats::add(TopClass c, std::uint64_t n) {
    total += n;
    switch (c) {
    case TopClass::School: schools += n; break;
    case TopClass::Clinic: clinics += n; break;
    case TopClass::Other: other += n; break;
    case TopClass::Unresolved: unresolved += n; break;
    }
}

CountStats& CountStats::operator+=(const CountStats& o) {
    total += o.total;
    schools += o.schools;
    clinics += o.clinics;
    unresolved += o.unresolved;
    other += o.other;
    return *this;
}

std::uint64_t CountStats::count(TopClass c) const noexcept {
    switch (c) {
    case TopClass::School: return schools;
    case TopClass::Clinic: return clinics;
    case TopClass::Other: return other;
    case TopClass::Unresolved: return unresolved;
    }
    return 0;
}

namespace {

std::vector<CountStats> ordered(std::map<std::string, CountStats>&& groups) {
    std::vector<CountStats> out;
    std::optional<CountStats> unassigned;
    for (auto& [key, stats] : groups) {
        if (key == kUnassignedGroup) unassigned = std::move(stats);
        else out.push_back(std::move(stats));
    }
    if (unassigned) out.push_back(std::move(*unassigned));
    return out;
}

}  // namespace

std::vector<CountStats> tally(std::span<const FacilityRecord> records, Grouping grouping, Stage stage) {
    std::map<std::string, CountStats> groups;
    for (const FacilityRecord& r : records) {
        std::string key;
        if (grouping.kind == Grouping::Kind::Country) {
            key = r.country.empty() ? std::string(kUnassignedGroup) : r.country;
        } else {
            if (grouping.level < 0 || grouping.level >= static_cast<int>(kAdminLevels))
                throw ContractError("tally: admin level out of range");
            const auto& id = r.admin_ids[static_cast<std::size_t>(grouping.level)];
            key = id ? *id : std::string(kUnassignedGroup);
        }
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) it->second.group = key;
        it->second.add(stage == Stage::Structured ? r.structured.top() : r.outcome.cls.top());
    }
    return ordered(std::move(groups));
}

std::vector<CountStats> merge_tallies(std::span<const std::vector<CountStats>> shards) {
    std::map<std::string, CountStats> groups;
    for (const auto& shard : shards) {
        for (const CountStats& s : shard) {
            auto [it, inserted] = groups.try_emplace(s.group);
            if (inserted) it->second.group = s.group;
            it->second += s;
        }
    }
    return ordered(std::move(groups));
}

Proportions proportions(const CountStats& s) {
    if (s.total == 0) throw ContractError("proportions undefined for group '" + s.group + "': total is 0");
    const double t = static_cast<double>(s.total);
    return {100.0 * static_cast<double>(s.schools) / t, 100.0 * static_cast<double>(s.clinics) / t,
            100.0 * static_cast<double>(s.unresolved) / t, 100.0 * static_cast<double>(s.other) / t};
}

double round_to(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

double density_per_100k(std::uint64_t count, std::uint64_t population, std::string_view group) {
    if (population == 0)
        throw ContractError("density undefined for group '" + std::string(group) + "': population is 0");
    return static_cast<double>(count) * 100000.0 / static_cast<double>(population);
}

DensityStats densities(const CountStats& s, std::uint64_t population) {
    return {s.group,
            density_per_100k(s.total, population, s.group),
            density_per_100k(s.schools, population, s.group),
            density_per_100k(s.clinics, population, s.group),
            density_per_100k(s.unresolved, population, s.group),
            density_per_100k(s.other, population, s.group)};
}

double median(std::span<const double> values) {
    if (values.empty()) throw ContractError("median of empty sequence");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::optional<double> log_density(double density) {
    if (!(density > 0.0)) return std::nullopt;
    return std::log(density);
}

std::vector<AreaFlag> flag_missing(std::span<const AdminArea> areas, int level, std::span<const CountStats> stats,
                                   std::uint64_t threshold) {
    std::unordered_map<std::string_view, std::uint64_t> totals;
    for (const CountStats& s : stats) totals[s.group] = s.total;
    std::vector<AreaFlag> out;
    for (const AdminArea& a : areas) {
        if (a.level != level) continue;
        auto it = totals.find(a.id);
        const std::uint64_t total = it == totals.end() ? 0 : it->second;
        out.push_back({&a, total, total <= threshold});
    }
    return out;
}

double mean_population_flagged(std::span<const AreaFlag> flags) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const AreaFlag& f : flags) {
        if (!f.flagged) continue;
        sum += static_cast<double>(f.area->population);
        ++n;
    }
    if (n == 0) throw ContractError("mean population undefined: no flagged areas");
    return sum / static_cast<double>(n);
}

}  // namespace osmfac
