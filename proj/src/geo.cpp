#include "brm/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace brm {

void GeoTransform::validate() const {
    if (!(resolution > 0) || !std::isfinite(resolution))
        throw Error("bad_transform", "resolution must be positive and finite");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
        throw Error("bad_transform", "origin must be finite");
}

Point grid_to_world(const GeoTransform& t, Cell c) {
    return {t.origin_x + c.x * t.resolution, t.origin_y + c.y * t.resolution};
}

Cell world_to_grid(const GeoTransform& t, Point p, int width, int height) {
    const int ix = static_cast<int>(std::lround((p.x - t.origin_x) / t.resolution));
    const int iy = static_cast<int>(std::lround((p.y - t.origin_y) / t.resolution));
    if (ix < 0 || ix >= width || iy < 0 || iy >= height) {
        std::ostringstream msg;
        msg << "point (" << p.x << ", " << p.y << ") maps to cell (" << ix << ", " << iy
            << ") outside the " << width << "x" << height << " grid";
        throw Error("out_of_bounds", msg.str());
    }
    return {ix, iy};
}

namespace {

void check_ring(const std::vector<Point>& ring, const char* what) {
    if (ring.size() < 3) throw Error("bad_ring", std::string(what) + " ring has fewer than 3 vertices");
    for (const auto& p : ring)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw Error("bad_ring", std::string(what) + " ring has non-finite coordinates");
}

std::vector<Point> parse_ring(const nlohmann::json& arr, const char* what) {
    std::vector<Point> ring;
    ring.reserve(arr.size());
    for (const auto& pos : arr) {
        if (!pos.is_array() || pos.size() < 2)
            throw Error("bad_geojson", "ring position is not an [x, y] array");
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    // rings are implicitly closed; drop an explicit closing vertex
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    check_ring(ring, what);
    return ring;
}

BuildingPolygon parse_polygon_rings(const nlohmann::json& rings) {
    if (!rings.is_array() || rings.empty())
        throw Error("bad_geojson", "polygon has no rings");
    BuildingPolygon poly;
    poly.exterior = parse_ring(rings[0], "exterior");
    for (std::size_t i = 1; i < rings.size(); ++i)
        poly.holes.push_back(parse_ring(rings[i], "hole"));
    return poly;
}

// Rejects documents whose geometry is degree-scale: every vertex inside
// lon/lat range and the whole extent under one unit in both axes.
// Building footprints in projected meters always span more than that.
void check_projected(const std::vector<BuildingPolygon>& polys) {
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    bool degrees_range = true;
    std::size_t vertices = 0;
    auto visit = [&](const Point& p) {
        ++vertices;
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
        if (std::abs(p.x) > 180.0 || std::abs(p.y) > 90.0) degrees_range = false;
    };
    for (const auto& poly : polys) {
        for (const auto& p : poly.exterior) visit(p);
        for (const auto& h : poly.holes)
            for (const auto& p : h) visit(p);
    }
    if (vertices == 0 || !degrees_range) return;
    if (max_x - min_x < 1.0 && max_y - min_y < 1.0) {
        std::ostringstream msg;
        msg << "coordinates look geographic (all within lon/lat range, extent " << (max_x - min_x)
            << " x " << (max_y - min_y)
            << " units); input must be in a projected coordinate system in meters";
        throw Error("geographic_crs", msg.str());
    }
}

}  // namespace

std::vector<BuildingPolygon> parse_polygons(std::string_view document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        std::ostringstream msg;
        msg << "malformed GeoJSON at byte " << e.byte << ": " << e.what();
        throw Error("parse_error", msg.str());
    }
    if (!doc.is_object() || doc.value("type", std::string()) != "FeatureCollection")
        throw Error("bad_geojson", "document is not a GeoJSON FeatureCollection");
    const auto features = doc.find("features");
    if (features == doc.end() || !features->is_array())
        throw Error("bad_geojson", "FeatureCollection has no features array");

    std::vector<BuildingPolygon> polys;
    std::size_t idx = 0;
    for (const auto& feature : *features) {
        const auto geom = feature.find("geometry");
        if (geom == feature.end() || geom->is_null())
            throw Error("bad_geojson", "feature " + std::to_string(idx) + " has no geometry");
        const std::string type = geom->value("type", std::string());
        const auto coords = geom->find("coordinates");
        if (coords == geom->end())
            throw Error("bad_geojson", "feature " + std::to_string(idx) + " has no coordinates");
        if (type == "Polygon") {
            polys.push_back(parse_polygon_rings(*coords));
        } else if (type == "MultiPolygon") {
            for (const auto& rings : *coords) polys.push_back(parse_polygon_rings(rings));
        } else {
            throw Error("bad_geojson", "feature " + std::to_string(idx) +
                                           " has unsupported geometry type '" + type + "'");
        }
        ++idx;
    }
    check_projected(polys);
    return polys;
}

namespace {

// Crossings of the horizontal line y = cy with every ring edge, half-open
// in y (min <= cy < max) so boundary rows resolve consistently.
void row_crossings(const BuildingPolygon& poly, double cy, std::vector<double>& xs) {
    xs.clear();
    auto ring_crossings = [&](const std::vector<Point>& ring) {
        const std::size_t m = ring.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Point& a = ring[i];
            const Point& b = ring[(i + 1) % m];
            if ((a.y <= cy && cy < b.y) || (b.y <= cy && cy < a.y)) {
                const double t = (cy - a.y) / (b.y - a.y);
                xs.push_back(a.x + t * (b.x - a.x));
            }
        }
    };
    ring_crossings(poly.exterior);
    for (const auto& h : poly.holes) ring_crossings(h);
}

struct Bounds {
    double min_x, max_x, min_y, max_y;
};

Bounds polygon_bounds(const BuildingPolygon& poly) {
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : poly.exterior) {
        b.min_x = std::min(b.min_x, p.x);
        b.max_x = std::max(b.max_x, p.x);
        b.min_y = std::min(b.min_y, p.y);
        b.max_y = std::max(b.max_y, p.y);
    }
    return b;
}

}  // namespace

BuildingRaster rasterize(const std::vector<BuildingPolygon>& polys, const GeoTransform& transform,
                         int width, int height, std::int64_t max_cells) {
    transform.validate();
    if (width <= 0 || height <= 0) throw Error("bad_dims", "raster dimensions must be positive");
    if (static_cast<std::int64_t>(width) * height > max_cells)
        throw Error("too_large", "raster exceeds the configured cell limit");

    BuildingRaster raster{width, height, transform, BitGrid(width, height)};
    const double res = transform.resolution;
    std::vector<double> xs;

    for (const auto& poly : polys) {
        check_ring(poly.exterior, "exterior");
        for (const auto& h : poly.holes) check_ring(h, "hole");
        const Bounds b = polygon_bounds(poly);
        int y0 = static_cast<int>(std::floor((b.min_y - transform.origin_y) / res)) - 1;
        int y1 = static_cast<int>(std::ceil((b.max_y - transform.origin_y) / res)) + 1;
        y0 = std::max(y0, 0);
        y1 = std::min(y1, height - 1);
        for (int iy = y0; iy <= y1; ++iy) {
            const double cy = transform.origin_y + iy * res;
            row_crossings(poly, cy, xs);
            if (xs.empty()) continue;
            std::sort(xs.begin(), xs.end());
            for (std::size_t p = 0; p + 1 < xs.size(); p += 2) {
                const double xa = xs[p], xb = xs[p + 1];
                // fill cells with center in [xa, xb); pin the boundaries by
                // the per-cell comparison so the interval fill agrees with a
                // pointwise test bit for bit
                int ix0 = static_cast<int>(std::ceil((xa - transform.origin_x) / res));
                while (ix0 > 0 && transform.origin_x + (ix0 - 1) * res >= xa) --ix0;
                while (transform.origin_x + ix0 * res < xa) ++ix0;
                int ix1 = static_cast<int>(std::floor((xb - transform.origin_x) / res));
                while (ix1 + 1 < width && transform.origin_x + (ix1 + 1) * res < xb) ++ix1;
                while (ix1 >= 0 && transform.origin_x + ix1 * res >= xb) --ix1;
                ix0 = std::max(ix0, 0);
                ix1 = std::min(ix1, width - 1);
                if (ix0 <= ix1) raster.cells.set_row_range(iy, ix0, ix1);
            }
        }
    }
    return raster;
}

// ---------------------------------------------------------------------------
// PGM / sidecar IO

void write_pgm(const std::filesystem::path& path, const BitGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
    out << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
    std::vector<unsigned char> row(grid.width());
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) row[x] = grid.get(x, y) ? 0 : 255;
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw Error("io", "failed writing " + path.string());
}

namespace {

int pgm_token(std::istream& in, const std::filesystem::path& path) {
    // skip whitespace and # comments
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw Error("io", "truncated PGM header in " + path.string());
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw Error("io", "bad PGM header token in " + path.string());
    return value;
}

}  // namespace

BitGrid read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw Error("io", path.string() + " is not a binary PGM (P5) file");
    const int w = pgm_token(in, path);
    const int h = pgm_token(in, path);
    const int maxval = pgm_token(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw Error("io", "unsupported PGM dimensions/maxval in " + path.string());
    BitGrid grid(w, h);
    std::vector<unsigned char> row(w);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), row.size());
        if (!in) throw Error("io", "truncated PGM pixel data in " + path.string());
        for (int x = 0; x < w; ++x)
            if (row[x] <= maxval / 2) grid.set(x, y, true);  // dark = building
    }
    return grid;
}

void write_geo_sidecar(const std::filesystem::path& path, const GeoTransform& t) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "origin_x = " << t.origin_x << "\n"
        << "origin_y = " << t.origin_y << "\n"
        << "resolution = " << t.resolution << "\n";
}

GeoTransform read_geo_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    GeoTransform t;
    bool have_res = false;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key, eq;
        double value;
        if (!(ls >> key)) continue;
        if (key.empty() || key[0] == '#') continue;
        if (!(ls >> eq)) continue;
        if (eq == "=") {
            if (!(ls >> value)) continue;
        } else {
            value = std::stod(eq);
        }
        if (key == "origin_x") t.origin_x = value;
        else if (key == "origin_y") t.origin_y = value;
        else if (key == "resolution") {
            t.resolution = value;
            have_res = true;
        }
    }
    if (!have_res) throw Error("io", "no resolution key in " + path.string());
    t.validate();
    return t;
}

void save_raster(const std::filesystem::path& pgm_path, const BuildingRaster& raster) {
    write_pgm(pgm_path, raster.cells);
    write_geo_sidecar(pgm_path.string() + ".geo", raster.transform);
}

BuildingRaster load_raster(const std::filesystem::path& pgm_path) {
    BitGrid grid = read_pgm(pgm_path);
    GeoTransform t = read_geo_sidecar(pgm_path.string() + ".geo");
    return {grid.width(), grid.height(), t, std::move(grid)};
}

}  // namespace brm
