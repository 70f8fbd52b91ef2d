#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "brm/geo.hpp"

namespace brm {

/// Downward camera model: full field of view (degrees), fixed flight
/// height (meters) and frame dimensions in pixels.
struct CameraConfig {
    double fov_alpha_deg = 43.0;
    double altitude_zl = 150.0;
    int frame_w = 640;
    int frame_h = 480;

    void validate() const;
    /// Ground half-width of the square frame footprint, z * tan(alpha/2).
    double ground_half_width() const;
    bool operator==(const CameraConfig&) const = default;
};

/// Ground radius (meters) of concentric layer k of n:
/// R_k = ((n+1-k)/n) * z_l * tan(alpha/2). Strictly decreasing in k.
double ground_radius(int k, int n, const CameraConfig& camera);

struct DiskSum {
    std::int64_t building = 0;
    std::int64_t total = 0;
    bool clipped = false;  // disk left the raster; out-of-raster cells excluded

    double ratio() const { return total == 0 ? 0.0 : static_cast<double>(building) / total; }
};

/// Reference disk count: building / total cells with center distance
/// <= radius_px of (cx, cy). Kept deliberately naive; generate() must
/// agree with it exactly at every valid cell.
DiskSum disk_sum_bruteforce(const BuildingRaster& raster, int cx, int cy, int radius_px);

/// One precomputed layer: ratio of building cells inside the layer disk,
/// evaluated on the strided lattice. NaN marks cells whose disk exits the
/// raster; valid() reads that mask.
struct RatioLayer {
    int k = 1;
    double ground_radius_m = 0;
    int radius_px = 0;
    std::vector<float> values;  // lattice row-major, NaN = invalid

    bool valid(int ix, int iy, int lattice_w) const {
        return !std::isnan(values[static_cast<std::size_t>(iy) * lattice_w + ix]);
    }
};

struct RatioMapSet {
    int n = 0;
    int lattice_w = 0;
    int lattice_h = 0;
    int stride = 1;  // raster cells between lattice points
    GeoTransform transform;  // of the source raster
    CameraConfig camera;
    std::vector<RatioLayer> layers;

    std::size_t lattice_size() const {
        return static_cast<std::size_t>(lattice_w) * lattice_h;
    }
    std::size_t index_of(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * lattice_w + ix;
    }
    /// World position of lattice point (ix, iy) = raster cell (ix*stride, iy*stride).
    Point world_of(int ix, int iy) const {
        return grid_to_world(transform, Cell{ix * stride, iy * stride});
    }
    bool valid(int ix, int iy) const {
        for (const auto& l : layers)
            if (!l.valid(ix, iy, lattice_w)) return false;
        return true;
    }
    /// Sum_k |M_k - f_k| at a lattice point; NaN when any layer is invalid.
    double residual(int ix, int iy, std::span<const double> f) const {
        double r = 0;
        const std::size_t i = index_of(ix, iy);
        for (int k = 0; k < n; ++k) r += std::abs(static_cast<double>(layers[k].values[i]) - f[k]);
        return r;
    }
};

/// Builds the n-layer ratio map with radii from ground_radius() rounded
/// half-up to cells. Throws a configuration error naming the layer when a
/// radius rounds below one cell.
RatioMapSet generate(const BuildingRaster& raster, const CameraConfig& camera, int n, int stride);

/// Same, with explicit per-layer ground radii (meters, strictly decreasing).
RatioMapSet generate_with_radii(const BuildingRaster& raster, const CameraConfig& camera,
                                std::span<const double> ground_radii_m, int stride);

// Binary format: magic "BRM1"; u32 n, lattice_w, lattice_h, stride;
// f64 resolution, origin_x, origin_y, z_l, alpha_deg; per layer f64
// ground_radius then lattice_w*lattice_h f32 row-major, NaN = invalid.
void save(const RatioMapSet& set, const std::filesystem::path& path);
RatioMapSet load(const std::filesystem::path& path);

}  // namespace brm
