#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "osmfac/pbf_reader.hpp"

namespace osmfac::testing {

namespace {

double snap(double deg) { return pbf::to_degrees(std::llround(deg * 1e7), 100, 0); }

std::string polygon(double lat0, double lon0, double size) {
    return fmt::format("[[[{0},{1}],[{2},{1}],[{2},{3}],[{0},{3}],[{0},{1}]]]", lon0, lat0, lon0 + size,
                       lat0 + size);
}

const std::vector<std::pair<std::string, std::string>> kFacilityTags{
    {"amenity", "school"},          {"amenity", "school"},         {"amenity", "clinic"},
    {"amenity", "hospital"},        {"amenity", "language_school"}, {"amenity", "university"},
    {"healthcare", "centre"},       {"building", "school"},        {"amenity", "pharmacy"},
    {"amenity", "place_of_worship"}, {"shop", "convenience"},      {"office", "government"},
    {"building", "yes"},            {"landuse", "farmland"},       {"amenity", "marketplace"}};

const std::vector<std::string> kSchoolNames{"École primaire de {}", "Lycée de {}",     "CEG {}",
                                            "Medersa {}",           "Collège de {}",   "Université de {}",
                                            "Jardin d'enfants {}",  "Ecole de musique {}"};
const std::vector<std::string> kClinicNames{"CSPS de {}",      "Hôpital de {}",      "Dispensaire {}",
                                            "Centre de santé {}", "Case de santé {}", "Maternité {}",
                                            "{} health post",   "Clinique {}"};
const std::vector<std::string> kPlaces{"Agadez",   "Zinder",  "Maradi",  "Tahoua", "Dosso",
                                       "Tillabéri", "Diffa",  "Niamey",  "Gaya",   "Birni N'Konni",
                                       "Tessaoua", "Magaria", "Madaoua", "Ayorou", "Téra"};
const std::vector<std::pair<std::string, std::string>> kNoise{
    {"source", "survey2020"},   {"source date", "21/03/2021"}, {"note", "ruins"},
    {"highway", "bus_stop"},    {"natural", "tree"},           {"place", "village"},
    {"name", "Marché central"}, {"power", "tower"},            {"fixme", "position approximate"},
    {"name", "Dr Ouédraogo"},   {"operator", "Institut Pasteur"}, {"name", "Quartier Plateau"}};

TagMap random_country_tags(Rng& rng) {
    TagMap tags;
    const std::size_t kind = pick(rng, 100);
    const std::string& place = pick_from(rng, kPlaces);
    if (kind < 8) {
        const auto& kv = pick_from(rng, kFacilityTags);
        tags.set(kv.first, kv.second);
        if (pick(rng, 2)) tags.set("name", fmt::format(fmt::runtime(pick_from(rng, kSchoolNames)), place));
    } else if (kind < 11) {
        tags.set("name", fmt::format(fmt::runtime(pick_from(rng, kSchoolNames)), place));
    } else if (kind < 14) {
        tags.set("name", fmt::format(fmt::runtime(pick_from(rng, kClinicNames)), place));
        if (pick(rng, 2)) tags.set("source date", "21/03/2021");
    } else {
        const std::size_t n = 1 + pick(rng, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& kv = pick_from(rng, kNoise);
            tags.set(kv.first, kv.second);
        }
        if (pick(rng, 4) == 0) tags.set("ref", std::to_string(pick(rng, 100000)));
    }
    return tags;
}

}  // namespace

std::vector<RawElement> worked_example_elements() {
    return {RawElement::node(1001, {13.5116, 2.1254}, {{"type", "boundary"}, {"place", "language school"}}),
            RawElement::node(1002, {13.5210, 2.1090}, {{"source date", "21/03/2021"}, {"name", "Niger hospital"}})};
}

std::string grid_cell_id(const GridSpec& grid, int row, int col) {
    return fmt::format("{}-r{}c{}", grid.country_id, row, col);
}

std::string grid_admin_geojson(const GridSpec& g) {
    std::string out = "{\"type\":\"FeatureCollection\",\"features\":[\n";
    out += fmt::format(
        "{{\"type\":\"Feature\",\"properties\":{{\"id\":\"{}\",\"level\":0,\"name\":\"{}\",\"population\":{}}},"
        "\"geometry\":{{\"type\":\"Polygon\",\"coordinates\":{}}}}}",
        g.country_id, g.country_name, g.country_population,
        fmt::format("[[[{0},{1}],[{2},{1}],[{2},{3}],[{0},{3}],[{0},{1}]]]", g.origin_lon, g.origin_lat,
                    g.origin_lon + g.cols * g.cell_size, g.origin_lat + g.rows * g.cell_size));
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r * g.cols + c);
            const std::uint64_t pop = g.cell_populations.empty() ? 10000 : g.cell_populations.at(i);
            out += fmt::format(
                ",\n{{\"type\":\"Feature\",\"properties\":{{\"id\":\"{}\",\"level\":3,\"name\":\"Cell {} {}\","
                "\"population\":{}}},\"geometry\":{{\"type\":\"Polygon\",\"coordinates\":{}}}}}",
                grid_cell_id(g, r, c), r, c, pop,
                polygon(g.origin_lat + r * g.cell_size, g.origin_lon + c * g.cell_size, g.cell_size));
        }
    }
    out += "\n]}\n";
    return out;
}

LatLon grid_cell_point(const GridSpec& g, int row, int col, double frac_lat, double frac_lon) {
    return {snap(g.origin_lat + (row + frac_lat) * g.cell_size), snap(g.origin_lon + (col + frac_lon) * g.cell_size)};
}

std::vector<RawElement> synthetic_country(Rng& rng, const GridSpec& g, std::size_t tagged_nodes) {
    std::uniform_real_distribution<double> frac(0.02, 0.98);
    // Uneven density: cell weight grows with row, some cells nearly empty.
    std::vector<double> weights;
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) weights.push_back((r * g.cols + c) % 7 == 0 ? 0.002 : 1.0 + r);
    std::discrete_distribution<std::size_t> cell(weights.begin(), weights.end());

    std::vector<RawElement> nodes, ways;
    std::int64_t next_node = 1;
    std::int64_t next_way = 1;
    auto point_in_cell = [&](std::size_t i) {
        const int r = static_cast<int>(i) / g.cols, c = static_cast<int>(i) % g.cols;
        return grid_cell_point(g, r, c, frac(rng), frac(rng));
    };
    for (std::size_t n = 0; n < tagged_nodes; ++n) {
        const std::size_t i = cell(rng);
        nodes.push_back(RawElement::node(next_node++, point_in_cell(i), random_country_tags(rng)));
        // Building outline or road built from fresh untagged vertices.
        if (pick(rng, 3) == 0) {
            const LatLon base = point_in_cell(i);
            const double d = 0.0001 * (1 + static_cast<double>(pick(rng, 5)));
            const std::vector<LatLon> corners{base, {snap(base.lat + d), base.lon}, {snap(base.lat + d), snap(base.lon + d)},
                                              {base.lat, snap(base.lon + d)}};
            std::vector<std::int64_t> refs;
            for (const LatLon& p : corners) {
                nodes.push_back(RawElement::node(next_node, p));
                refs.push_back(next_node++);
            }
            if (pick(rng, 4)) {
                refs.push_back(refs.front());
                TagMap tags = random_country_tags(rng);
                if (pick(rng, 2)) tags.set("building", "yes");
                ways.push_back(RawElement::way(next_way++, std::move(refs), std::move(tags)));
            } else {
                ways.push_back(RawElement::way(next_way++, std::move(refs), {{"highway", "track"}}));
            }
        }
    }
    std::vector<RawElement> out = std::move(nodes);
    out.insert(out.end(), ways.begin(), ways.end());
    out.push_back(RawElement::relation(1, {{MemberType::Way, 1, "outer"}}, {{"type", "multipolygon"}}));
    return out;
}

void write_text(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace osmfac::testing
