#pragma once

// Synthetic inputs shared by the integration tests and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "generators.hpp"
#include "osmfac/element.hpp"

namespace osmfac::testing {

/// The two tagged nodes of the worked classification example.
std::vector<RawElement> worked_example_elements();

struct GridSpec {
    std::string country_id = "NE";
    std::string country_name = "Niger";
    std::uint64_t country_population = 24000000;
    double origin_lat = 10.0;
    double origin_lon = 0.0;
    double cell_size = 1.0;
    int rows = 10;
    int cols = 10;
    std::vector<std::uint64_t> cell_populations;  // row-major; empty = 10000 each
};

/// Level-0 country covering the grid plus one level-3 area per cell with ids
/// "<country_id>-r<row>c<col>".
std::string grid_admin_geojson(const GridSpec& grid);
std::string grid_cell_id(const GridSpec& grid, int row, int col);

/// Centre of a grid cell, snapped to the 100-nanodegree grid.
LatLon grid_cell_point(const GridSpec& grid, int row, int col, double frac_lat = 0.5, double frac_lon = 0.5);

/// Element set for a "country" extract: tagged nodes with facility and
/// unrelated tags, untagged vertices, closed building ways and open roads,
/// scattered over the grid with uneven density. Sorted nodes, ways,
/// relations.
std::vector<RawElement> synthetic_country(Rng& rng, const GridSpec& grid, std::size_t tagged_nodes);

/// Writes `content` to `path`, creating parent directories.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace osmfac::testing
