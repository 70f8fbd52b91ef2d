#pragma once

// Test-side reference implementations. Everything here recomputes results
// by naive full scans, independent of the library's fast paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "brm/geo.hpp"
#include "brm/matcher.hpp"
#include "brm/ratio_map.hpp"

namespace brmtest {

// splitmix64-backed generator, stable regardless of the standard library
struct TestRng {
    std::uint64_t state;

    explicit TestRng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    bool chance(double p) { return uniform() < p; }
};

inline brm::BuildingRaster random_raster(std::uint64_t seed, int w, int h, double density,
                                         brm::GeoTransform t = {0.5, 0.5, 1.0}) {
    TestRng rng(seed);
    brm::BuildingRaster raster{w, h, t, brm::BitGrid(w, h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rng.chance(density)) raster.cells.set(x, y, true);
    return raster;
}

// random axis-aligned rectangles; spatially structured unlike iid noise
inline brm::BuildingRaster blocky_raster(std::uint64_t seed, int w, int h, int blocks,
                                         brm::GeoTransform t = {0.5, 0.5, 1.0}) {
    TestRng rng(seed);
    brm::BuildingRaster raster{w, h, t, brm::BitGrid(w, h)};
    for (int b = 0; b < blocks; ++b) {
        const int bw = rng.uniform_int(2, std::max(2, w / 4));
        const int bh = rng.uniform_int(2, std::max(2, h / 4));
        const int x0 = rng.uniform_int(0, std::max(0, w - bw));
        const int y0 = rng.uniform_int(0, std::max(0, h - bh));
        for (int y = y0; y < y0 + bh; ++y)
            for (int x = x0; x < x0 + bw; ++x) raster.cells.set(x, y, true);
    }
    return raster;
}

// crossing-number point-in-polygon with the same half-open edge rule the
// rasterizer documents; evaluated per point, no scanline sharing
inline bool point_in_ring(const std::vector<brm::Point>& ring, double px, double py) {
    bool inside = false;
    const std::size_t m = ring.size();
    for (std::size_t i = 0; i < m; ++i) {
        const brm::Point& a = ring[i];
        const brm::Point& b = ring[(i + 1) % m];
        if ((a.y <= py && py < b.y) || (b.y <= py && py < a.y)) {
            const double xc = a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x);
            if (px < xc) inside = !inside;
        }
    }
    return inside;
}

inline bool point_in_polygons(const std::vector<brm::BuildingPolygon>& polys, double px,
                              double py) {
    for (const auto& poly : polys) {
        int crossings = point_in_ring(poly.exterior, px, py) ? 1 : 0;
        for (const auto& hole : poly.holes) crossings += point_in_ring(hole, px, py) ? 1 : 0;
        if (crossings % 2 == 1) return true;
    }
    return false;
}

// naive disk ratio at a raster cell; nullopt when the disk leaves the grid
inline std::optional<double> oracle_disk_ratio(const brm::BuildingRaster& raster, int cx, int cy,
                                               int radius_px) {
    std::int64_t building = 0, total = 0;
    bool clipped = false;
    for (int dy = -radius_px; dy <= radius_px; ++dy)
        for (int dx = -radius_px; dx <= radius_px; ++dx) {
            if (static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy >
                static_cast<std::int64_t>(radius_px) * radius_px)
                continue;
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || x >= raster.width || y < 0 || y >= raster.height) {
                clipped = true;
                continue;
            }
            ++total;
            if (raster.cells.get(x, y)) ++building;
        }
    if (clipped) return std::nullopt;
    return static_cast<double>(building) / static_cast<double>(total);
}

// naive frame-feature counting: every pixel tested against every disk
inline std::vector<double> oracle_extract(const brm::BitGrid& bits,
                                          const std::vector<double>& radii_px) {
    const int h = bits.width();
    const int c = h / 2;
    std::vector<double> f;
    for (double r : radii_px) {
        std::int64_t building = 0, total = 0;
        for (int y = 0; y < bits.height(); ++y)
            for (int x = 0; x < h; ++x) {
                const double dx = x - c, dy = y - c;
                if (dx * dx + dy * dy > r * r) continue;
                ++total;
                if (bits.get(x, y)) ++building;
            }
        f.push_back(static_cast<double>(building) / static_cast<double>(total));
    }
    return f;
}

// ---- full-scan matcher replay ----

inline double oracle_residual(const brm::RatioMapSet& map, int ix, int iy,
                              const std::vector<double>& f) {
    double acc = 0;
    for (int k = 0; k < map.n; ++k) {
        const float v =
            map.layers[static_cast<std::size_t>(k)]
                .values[static_cast<std::size_t>(iy) * map.lattice_w + ix];
        acc += std::abs(static_cast<double>(v) - f[static_cast<std::size_t>(k)]);
    }
    return acc;
}

inline void oracle_cap_and_sort(std::vector<brm::Candidate>& cands, std::size_t k_cap,
                                int lattice_w) {
    const auto cell_of = [lattice_w](const brm::Candidate& c) {
        return static_cast<std::uint64_t>(c.iy) * static_cast<std::uint64_t>(lattice_w) + c.ix;
    };
    if (cands.size() > k_cap) {
        std::sort(cands.begin(), cands.end(),
                  [&](const brm::Candidate& a, const brm::Candidate& b) {
                      if (a.residual != b.residual) return a.residual < b.residual;
                      if (cell_of(a) != cell_of(b)) return cell_of(a) < cell_of(b);
                      return a.parent < b.parent;
                  });
        cands.resize(k_cap);
    }
    std::sort(cands.begin(), cands.end(), [&](const brm::Candidate& a, const brm::Candidate& b) {
        if (cell_of(a) != cell_of(b)) return cell_of(a) < cell_of(b);
        return a.parent < b.parent;
    });
}

inline std::vector<brm::Candidate> oracle_global(const brm::RatioMapSet& map,
                                                 const std::vector<double>& f,
                                                 const brm::MatcherConfig& cfg) {
    std::vector<brm::Candidate> out;
    for (int iy = 0; iy < map.lattice_h; ++iy)
        for (int ix = 0; ix < map.lattice_w; ++ix) {
            if (!map.valid(ix, iy)) continue;
            const double res = oracle_residual(map, ix, iy, f);
            if (!(res < cfg.e1)) continue;
            const auto p = map.world_of(ix, iy);
            out.push_back({static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy), p.x,
                           p.y, -1, 0, 0, res});
        }
    oracle_cap_and_sort(out, cfg.k_cap, map.lattice_w);
    return out;
}

inline std::vector<brm::Candidate> oracle_track_step(const brm::RatioMapSet& map,
                                                     const std::vector<brm::Candidate>& prev,
                                                     const std::vector<double>& f, double d,
                                                     const brm::MatcherConfig& cfg) {
    std::vector<brm::Candidate> out;
    for (std::size_t j = 0; j < prev.size(); ++j) {
        const brm::Candidate& p = prev[j];
        const bool has_heading =
            p.parent >= 0 && !(p.x == p.parent_x && p.y == p.parent_y);
        double cx = 0, cy = 0;
        if (has_heading) {
            const double theta = std::atan2(p.y - p.parent_y, p.x - p.parent_x);
            cx = p.x + d * std::cos(theta);
            cy = p.y + d * std::sin(theta);
        }
        for (int iy = 0; iy < map.lattice_h; ++iy)
            for (int ix = 0; ix < map.lattice_w; ++ix) {
                if (!map.valid(ix, iy)) continue;
                const auto w = map.world_of(ix, iy);
                bool keep;
                if (has_heading)
                    keep = std::abs(w.x - cx) < cfg.epsilon && std::abs(w.y - cy) < cfg.epsilon;
                else
                    keep = std::abs(std::hypot(w.x - p.x, w.y - p.y) - d) <= cfg.epsilon;
                if (!keep) continue;
                const double res = oracle_residual(map, ix, iy, f);
                if (!(res < cfg.e1)) continue;
                out.push_back({static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy),
                               w.x, w.y, static_cast<std::int64_t>(j), p.x, p.y, res});
            }
    }
    oracle_cap_and_sort(out, cfg.k_cap, map.lattice_w);
    return out;
}

/// hand-buildable lattice map: world = lattice indices scaled by `cell_m`
inline brm::RatioMapSet make_lattice_map(int w, int h, double cell_m,
                                         const std::vector<std::vector<float>>& layer_values) {
    brm::RatioMapSet map;
    map.n = static_cast<int>(layer_values.size());
    map.lattice_w = w;
    map.lattice_h = h;
    map.stride = 1;
    map.transform = {0, 0, cell_m};
    map.camera.altitude_zl = 150;
    map.camera.fov_alpha_deg = 43;
    for (int k = 1; k <= map.n; ++k) {
        brm::RatioLayer layer;
        layer.k = k;
        layer.ground_radius_m = cell_m * (map.n + 1 - k);
        layer.radius_px = map.n + 1 - k;
        layer.values = layer_values[static_cast<std::size_t>(k) - 1];
        map.layers.push_back(std::move(layer));
    }
    return map;
}

inline std::vector<std::vector<float>> random_layers(std::uint64_t seed, int w, int h, int n,
                                                     double nan_prob = 0.0) {
    TestRng rng(seed);
    std::vector<std::vector<float>> layers(static_cast<std::size_t>(n));
    for (auto& vals : layers) {
        vals.resize(static_cast<std::size_t>(w) * h);
        for (auto& v : vals)
            v = rng.chance(nan_prob) ? std::numeric_limits<float>::quiet_NaN()
                                     : static_cast<float>(rng.uniform());
    }
    // a NaN in any layer invalidates the cell in all layers, matching the
    // generator's border policy
    for (std::size_t at = 0; at < layers[0].size(); ++at) {
        bool any_nan = false;
        for (const auto& vals : layers) any_nan |= std::isnan(vals[at]);
        if (any_nan)
            for (auto& vals : layers) vals[at] = std::numeric_limits<float>::quiet_NaN();
    }
    return layers;
}

inline bool candidates_equal(const std::vector<brm::Candidate>& a,
                             const std::vector<brm::Candidate>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].ix != b[i].ix || a[i].iy != b[i].iy || a[i].parent != b[i].parent) return false;
        if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
        if (a[i].residual != b[i].residual) return false;
        if (a[i].parent >= 0 && (a[i].parent_x != b[i].parent_x || a[i].parent_y != b[i].parent_y))
            return false;
    }
    return true;
}

}  // namespace brmtest
