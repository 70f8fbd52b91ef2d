#include "brm/ratio_map.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "brm/disk.hpp"

static_assert(std::endian::native == std::endian::little,
              "ratio map file IO assumes a little-endian host");

namespace brm {

void CameraConfig::validate() const {
    if (!(fov_alpha_deg > 0) || !(fov_alpha_deg < 180))
        throw Error("bad_camera", "field of view must be in (0, 180) degrees");
    if (!(altitude_zl > 0) || !std::isfinite(altitude_zl))
        throw Error("bad_camera", "altitude must be positive and finite");
    if (frame_h <= 0 || frame_w < frame_h)
        throw Error("bad_camera", "frame dimensions must satisfy frame_w >= frame_h > 0");
}

double CameraConfig::ground_half_width() const {
    return altitude_zl * std::tan(fov_alpha_deg * std::numbers::pi / 360.0);
}

double ground_radius(int k, int n, const CameraConfig& camera) {
    camera.validate();
    if (n < 1 || k < 1 || k > n) throw Error("bad_layer", "layer index must satisfy 1 <= k <= n");
    return (static_cast<double>(n + 1 - k) / n) * camera.ground_half_width();
}

DiskSum disk_sum_bruteforce(const BuildingRaster& raster, int cx, int cy, int radius_px) {
    DiskSum sum;
    const double r2 = static_cast<double>(radius_px) * radius_px;
    for (int dy = -radius_px; dy <= radius_px; ++dy) {
        for (int dx = -radius_px; dx <= radius_px; ++dx) {
            if (!in_disk(dx, dy, r2)) continue;
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || x >= raster.width || y < 0 || y >= raster.height) {
                sum.clipped = true;
                continue;
            }
            ++sum.total;
            if (raster.cells.get(x, y)) ++sum.building;
        }
    }
    return sum;
}

namespace {

int lattice_extent(int cells, int stride) { return (cells - 1) / stride + 1; }

// Row prefix sums of the building bitmap: P[y][x] = count of cells [0, x)
// in row y. Shared by every layer of one generate call.
struct RowPrefix {
    int width;
    std::vector<std::uint32_t> data;  // (width + 1) per row

    RowPrefix(const BuildingRaster& raster) : width(raster.width) {
        data.resize(static_cast<std::size_t>(raster.height) * (width + 1));
        for (int y = 0; y < raster.height; ++y) {
            std::uint32_t* row = &data[static_cast<std::size_t>(y) * (width + 1)];
            row[0] = 0;
            for (int x = 0; x < width; ++x)
                row[x + 1] = row[x] + (raster.cells.get(x, y) ? 1 : 0);
        }
    }

    std::uint32_t range(int y, int x0, int x1) const {  // inclusive cells x0..x1
        const std::uint32_t* row = &data[static_cast<std::size_t>(y) * (width + 1)];
        return row[x1 + 1] - row[x0];
    }
};

RatioLayer build_layer(const BuildingRaster& raster, const RowPrefix& prefix, int k,
                       double ground_radius_m, int radius_px, int stride, int lw, int lh) {
    RatioLayer layer;
    layer.k = k;
    layer.ground_radius_m = ground_radius_m;
    layer.radius_px = radius_px;
    layer.values.assign(static_cast<std::size_t>(lw) * lh,
                        std::numeric_limits<float>::quiet_NaN());

    const auto chords = disk_half_chords(radius_px);
    std::int64_t disk_total = 0;
    for (int w : chords) disk_total += 2 * w + 1;

    for (int iy = 0; iy < lh; ++iy) {
        const int cy = iy * stride;
        if (cy - radius_px < 0 || cy + radius_px >= raster.height) continue;
        for (int ix = 0; ix < lw; ++ix) {
            const int cx = ix * stride;
            if (cx - radius_px < 0 || cx + radius_px >= raster.width) continue;
            std::int64_t building = 0;
            for (int dy = -radius_px; dy <= radius_px; ++dy) {
                const int w = chords[dy + radius_px];
                building += prefix.range(cy + dy, cx - w, cx + w);
            }
            layer.values[static_cast<std::size_t>(iy) * lw + ix] =
                static_cast<float>(static_cast<double>(building) / disk_total);
        }
    }
    return layer;
}

RatioMapSet generate_impl(const BuildingRaster& raster, const CameraConfig& camera,
                          std::span<const double> radii_m, int stride) {
    camera.validate();
    raster.transform.validate();
    if (stride < 1) throw Error("bad_stride", "stride must be at least 1 cell");
    if (radii_m.empty()) throw Error("bad_layer", "layer count must be at least 1");
    for (std::size_t i = 1; i < radii_m.size(); ++i)
        if (!(radii_m[i] < radii_m[i - 1]))
            throw Error("bad_layer", "ground radii must be strictly decreasing in k");

    RatioMapSet set;
    set.n = static_cast<int>(radii_m.size());
    set.stride = stride;
    set.transform = raster.transform;
    set.camera = camera;
    set.lattice_w = lattice_extent(raster.width, stride);
    set.lattice_h = lattice_extent(raster.height, stride);

    const RowPrefix prefix(raster);
    for (int k = 1; k <= set.n; ++k) {
        const double rm = radii_m[k - 1];
        const int radius_px = static_cast<int>(std::lround(rm / raster.transform.resolution));
        if (radius_px < 1) {
            std::ostringstream msg;
            msg << "layer " << k << " ground radius " << rm << " m rounds below one cell at "
                << raster.transform.resolution << " m/cell";
            throw Error("bad_config", msg.str());
        }
        set.layers.push_back(build_layer(raster, prefix, k, rm, radius_px, stride, set.lattice_w,
                                         set.lattice_h));
    }
    return set;
}

}  // namespace

RatioMapSet generate(const BuildingRaster& raster, const CameraConfig& camera, int n, int stride) {
    if (n < 1) throw Error("bad_layer", "layer count must be at least 1");
    std::vector<double> radii(n);
    for (int k = 1; k <= n; ++k) radii[k - 1] = ground_radius(k, n, camera);
    return generate_impl(raster, camera, radii, stride);
}

RatioMapSet generate_with_radii(const BuildingRaster& raster, const CameraConfig& camera,
                                std::span<const double> ground_radii_m, int stride) {
    return generate_impl(raster, camera, ground_radii_m, stride);
}

// ---------------------------------------------------------------------------
// Binary file IO

namespace {

constexpr char kMagic[4] = {'B', 'R', 'M', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::filesystem::path& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("io", "truncated ratio map file " + path.string());
    return v;
}

}  // namespace

void save(const RatioMapSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    write_raw(out, static_cast<std::uint32_t>(set.n));
    write_raw(out, static_cast<std::uint32_t>(set.lattice_w));
    write_raw(out, static_cast<std::uint32_t>(set.lattice_h));
    write_raw(out, static_cast<std::uint32_t>(set.stride));
    write_raw(out, set.transform.resolution);
    write_raw(out, set.transform.origin_x);
    write_raw(out, set.transform.origin_y);
    write_raw(out, set.camera.altitude_zl);
    write_raw(out, set.camera.fov_alpha_deg);
    for (const auto& layer : set.layers) {
        write_raw(out, layer.ground_radius_m);
        out.write(reinterpret_cast<const char*>(layer.values.data()),
                  static_cast<std::streamsize>(layer.values.size() * sizeof(float)));
    }
    if (!out) throw Error("io", "failed writing " + path.string());
}

RatioMapSet load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open " + path.string());
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("bad_magic", path.string() + " is not a BRM1 ratio map file");

    RatioMapSet set;
    set.n = static_cast<int>(read_raw<std::uint32_t>(in, path));
    set.lattice_w = static_cast<int>(read_raw<std::uint32_t>(in, path));
    set.lattice_h = static_cast<int>(read_raw<std::uint32_t>(in, path));
    set.stride = static_cast<int>(read_raw<std::uint32_t>(in, path));
    set.transform.resolution = read_raw<double>(in, path);
    set.transform.origin_x = read_raw<double>(in, path);
    set.transform.origin_y = read_raw<double>(in, path);
    set.camera.altitude_zl = read_raw<double>(in, path);
    set.camera.fov_alpha_deg = read_raw<double>(in, path);
    if (set.n < 1 || set.n > 1024 || set.lattice_w < 1 || set.lattice_h < 1 || set.stride < 1)
        throw Error("bad_header", "implausible ratio map header in " + path.string());
    set.transform.validate();

    const std::size_t cells = set.lattice_size();
    for (int k = 1; k <= set.n; ++k) {
        RatioLayer layer;
        layer.k = k;
        layer.ground_radius_m = read_raw<double>(in, path);
        layer.radius_px =
            static_cast<int>(std::lround(layer.ground_radius_m / set.transform.resolution));
        layer.values.resize(cells);
        in.read(reinterpret_cast<char*>(layer.values.data()),
                static_cast<std::streamsize>(cells * sizeof(float)));
        if (!in) throw Error("io", "truncated ratio map file " + path.string());
        set.layers.push_back(std::move(layer));
    }
    return set;
}

}  // namespace brm
