#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "brm/bitgrid.hpp"
#include "brm/error.hpp"

namespace brm {

struct Point {
    double x = 0;
    double y = 0;
    bool operator==(const Point&) const = default;
};

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/// Affine grid<->world mapping. `origin_x/origin_y` are the world
/// coordinates (meters) of the center of cell (0,0); `resolution` is
/// meters per cell. Row index grows with world y.
struct GeoTransform {
    double origin_x = 0;
    double origin_y = 0;
    double resolution = 1.0;

    void validate() const;
    bool operator==(const GeoTransform&) const = default;
};

Point grid_to_world(const GeoTransform& t, Cell c);

/// Nearest cell for a world point; throws when the result falls outside
/// the width x height grid.
Cell world_to_grid(const GeoTransform& t, Point p, int width, int height);

/// One polygon: exterior ring plus zero or more hole rings, world meters.
/// Rings are implicitly closed.
struct BuildingPolygon {
    std::vector<Point> exterior;
    std::vector<std::vector<Point>> holes;
};

struct BuildingRaster {
    int width = 0;
    int height = 0;
    GeoTransform transform;
    BitGrid cells;  // true = building

    Cell world_to_grid(Point p) const { return brm::world_to_grid(transform, p, width, height); }
    Point grid_to_world(Cell c) const { return brm::grid_to_world(transform, c); }
    double building_fraction() const {
        return static_cast<double>(cells.count_all()) / (static_cast<double>(width) * height);
    }
};

/// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features in
/// a projected (meters) coordinate system. Degree-scale documents (all
/// vertices within lon/lat range and sub-unit extent) are rejected.
std::vector<BuildingPolygon> parse_polygons(std::string_view document);

inline constexpr std::int64_t kDefaultMaxRasterCells = 100'000'000;

/// Rasterizes polygons onto a width x height grid: a cell is set iff its
/// center is inside a polygon under the even-odd rule (holes subtract).
/// Boundary cells follow the half-open rule so shared edges never
/// double-count.
BuildingRaster rasterize(const std::vector<BuildingPolygon>& polys, const GeoTransform& transform,
                         int width, int height,
                         std::int64_t max_cells = kDefaultMaxRasterCells);

// PGM (P5) raster image, building = 0 (black), other = 255 (white), and
// the sidecar geotransform text file (keys origin_x, origin_y, resolution).
void write_pgm(const std::filesystem::path& path, const BitGrid& grid);
BitGrid read_pgm(const std::filesystem::path& path);
void write_geo_sidecar(const std::filesystem::path& path, const GeoTransform& t);
GeoTransform read_geo_sidecar(const std::filesystem::path& path);

void save_raster(const std::filesystem::path& pgm_path, const BuildingRaster& raster);
BuildingRaster load_raster(const std::filesystem::path& pgm_path);

}  // namespace brm
