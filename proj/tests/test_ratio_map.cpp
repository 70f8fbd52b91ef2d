#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "brm/ratio_map.hpp"
#include "helpers.hpp"

using namespace brm;
namespace fs = std::filesystem;

namespace {

CameraConfig table_camera() { return {}; }  // 43 deg, 150 m

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "brm_test_ratio";
    fs::create_directories(dir);
    return dir;
}

bool maps_equal(const RatioMapSet& a, const RatioMapSet& b) {
    if (a.n != b.n || a.lattice_w != b.lattice_w || a.lattice_h != b.lattice_h ||
        a.stride != b.stride)
        return false;
    if (a.transform.origin_x != b.transform.origin_x ||
        a.transform.origin_y != b.transform.origin_y ||
        a.transform.resolution != b.transform.resolution)
        return false;
    for (int k = 0; k < a.n; ++k) {
        const auto& la = a.layers[static_cast<std::size_t>(k)];
        const auto& lb = b.layers[static_cast<std::size_t>(k)];
        if (la.ground_radius_m != lb.ground_radius_m) return false;
        for (std::size_t i = 0; i < la.values.size(); ++i) {
            const bool na = std::isnan(la.values[i]), nb = std::isnan(lb.values[i]);
            if (na != nb) return false;
            if (!na && la.values[i] != lb.values[i]) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("ground radii for the standard parameter set") {
    const auto cam = table_camera();

    const double r3 = ground_radius(3, 3, cam);
    const double r2 = ground_radius(2, 3, cam);
    const double r1 = ground_radius(1, 3, cam);

    // 50 * tan(21.5 deg), evaluated independently
    const double expected_r3 = 50.0 * std::tan(21.5 * std::acos(-1.0) / 180.0);
    CHECK(r3 == doctest::Approx(expected_r3).epsilon(1e-12));
    CHECK(r1 == doctest::Approx(3 * expected_r3).epsilon(1e-12));

    // published magnitudes
    CHECK(r3 == doctest::Approx(19.695).epsilon(5e-5));
    CHECK(r1 == doctest::Approx(59.086).epsilon(5e-5));
    CHECK(r2 == doctest::Approx(39.391).epsilon(5e-5));

    // arithmetic spacing: R_k - R_{k+1} = R_n
    CHECK(r1 - r2 == doctest::Approx(r3).epsilon(1e-12));
    CHECK(r2 - r3 == doctest::Approx(r3).epsilon(1e-12));

    // alpha -> 0 collapses all radii
    CameraConfig narrow = cam;
    narrow.fov_alpha_deg = 1e-9;
    CHECK(ground_radius(1, 3, narrow) < 1e-6);

    CHECK_THROWS_AS(ground_radius(0, 3, cam), Error);
    CHECK_THROWS_AS(ground_radius(4, 3, cam), Error);
}

TEST_CASE("camera validation") {
    CameraConfig cam;
    cam.fov_alpha_deg = 0;
    CHECK_THROWS_AS(cam.validate(), Error);
    cam.fov_alpha_deg = 180;
    CHECK_THROWS_AS(cam.validate(), Error);
    cam = {};
    cam.altitude_zl = -5;
    CHECK_THROWS_AS(cam.validate(), Error);
    cam = {};
    cam.frame_w = 400;
    cam.frame_h = 480;  // wider than tall required
    CHECK_THROWS_AS(cam.validate(), Error);
    CHECK_NOTHROW(CameraConfig{}.validate());
}

TEST_CASE("brute-force disk sums") {
    GeoTransform t{0.5, 0.5, 1.0};
    BuildingRaster ones{9, 9, t, BitGrid(9, 9)};
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) ones.cells.set(x, y, true);

    const auto d2 = disk_sum_bruteforce(ones, 4, 4, 2);
    CHECK(d2.total == 13);
    CHECK(d2.building == 13);
    CHECK_FALSE(d2.clipped);

    BuildingRaster zeros{9, 9, t, BitGrid(9, 9)};
    CHECK(disk_sum_bruteforce(zeros, 4, 4, 2).building == 0);

    const auto d0 = disk_sum_bruteforce(ones, 3, 3, 0);
    CHECK(d0.total == 1);
    CHECK(d0.building == 1);

    CHECK(disk_sum_bruteforce(ones, 0, 0, 2).clipped);
}

TEST_CASE("generate on uniform and half-plane rasters") {
    GeoTransform t{0.5, 0.5, 1.0};
    BuildingRaster ones{40, 40, t, BitGrid(40, 40)};
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) ones.cells.set(x, y, true);

    CameraConfig cam;
    cam.fov_alpha_deg = 43;
    cam.altitude_zl = 150;
    const double radii[] = {9, 6, 3};
    const auto map = generate_with_radii(ones, cam, radii, 1);
    REQUIRE(map.n == 3);
    for (int k = 0; k < 3; ++k)
        for (int iy = 0; iy < map.lattice_h; ++iy)
            for (int ix = 0; ix < map.lattice_w; ++ix)
                if (map.layers[k].valid(ix, iy, map.lattice_w))
                    CHECK(map.layers[k].values[map.index_of(ix, iy)] == 1.0f);

    // left half built: boundary-column value is 0.5 up to one half-chord
    BuildingRaster half{41, 41, t, BitGrid(41, 41)};
    for (int y = 0; y < 41; ++y)
        for (int x = 0; x < 20; ++x) half.cells.set(x, y, true);
    const double one_radius[] = {8};
    const auto hmap = generate_with_radii(half, cam, one_radius, 1);
    const float v = hmap.layers[0].values[hmap.index_of(20, 20)];
    const double disk_size = static_cast<double>(disk_sum_bruteforce(half, 20, 20, 8).total);
    CHECK(std::abs(v - 0.5) <= (2.0 * 8 + 1) / disk_size);
}

TEST_CASE("generate matches the brute-force oracle") {
    CameraConfig cam;
    brmtest::TestRng rng(99);
    for (int trial = 0; trial < 12; ++trial) {
        const int w = rng.uniform_int(24, 64), h = rng.uniform_int(24, 64);
        const auto raster = trial % 2 == 0
                                ? brmtest::random_raster(1000 + trial, w, h, rng.uniform(0.1, 0.7))
                                : brmtest::blocky_raster(2000 + trial, w, h, 8);
        const int stride = rng.uniform_int(1, 3);
        const double radii[] = {9, 5, 3};
        const auto map = generate_with_radii(raster, cam, radii, stride);

        CHECK(map.lattice_w == (w - 1) / stride + 1);
        CHECK(map.lattice_h == (h - 1) / stride + 1);
        for (int k = 0; k < 3; ++k) {
            const int r = static_cast<int>(radii[k]);
            for (int iy = 0; iy < map.lattice_h; ++iy)
                for (int ix = 0; ix < map.lattice_w; ++ix) {
                    const auto expect =
                        brmtest::oracle_disk_ratio(raster, ix * stride, iy * stride, r);
                    const float got = map.layers[k].values[map.index_of(ix, iy)];
                    if (!expect) {
                        REQUIRE(std::isnan(got));
                    } else {
                        REQUIRE_FALSE(std::isnan(got));
                        REQUIRE(got == static_cast<float>(*expect));
                    }
                }
        }
    }
}

TEST_CASE("generate from the camera geometry") {
    // 0.5 m cells: radii 118 / 79 / 39 cells for the standard parameters
    const auto raster = brmtest::blocky_raster(3, 300, 280, 30, {0.25, 0.25, 0.5});
    const auto map = generate(raster, table_camera(), 3, 10);
    CHECK(map.layers[0].radius_px == 118);
    CHECK(map.layers[1].radius_px == 79);
    CHECK(map.layers[2].radius_px == 39);
    CHECK(map.stride == 10);
    CHECK(map.lattice_w == 30);
    CHECK(map.lattice_h == 28);

    // world mapping of lattice points follows the raster transform
    const auto p = map.world_of(3, 5);
    CHECK(p.x == doctest::Approx(0.25 + 30 * 0.5));
    CHECK(p.y == doctest::Approx(0.25 + 50 * 0.5));

    // a layer radius that rounds below one cell is a config error naming
    // the offending layer; at z = 1.2 only the innermost disk degenerates
    CameraConfig tiny = table_camera();
    tiny.altitude_zl = 1.2;
    try {
        generate(raster, tiny, 3, 10);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.code() == "bad_config");
        CHECK(std::string(e.what()).find("layer 3") != std::string::npos);
    }
}

TEST_CASE("translation equivariance") {
    const int shift = 7;
    const auto base = brmtest::blocky_raster(12, 60, 60, 10);
    BuildingRaster moved{60, 60, base.transform, BitGrid(60, 60)};
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 60; ++x)
            if (x + shift < 60 && base.cells.get(x, y)) moved.cells.set(x + shift, y, true);
    // guard: nothing was lost off the right edge
    REQUIRE(moved.cells.count_all() ==
            base.cells.count_all() - [&] {
                std::int64_t lost = 0;
                for (int y = 0; y < 60; ++y)
                    for (int x = 60 - shift; x < 60; ++x) lost += base.cells.get(x, y);
                return lost;
            }());

    CameraConfig cam;
    const double radii[] = {5};
    const auto m0 = generate_with_radii(base, cam, radii, 1);
    const auto m1 = generate_with_radii(moved, cam, radii, 1);
    for (int iy = 0; iy < 60; ++iy)
        for (int ix = 0; ix + shift < 60; ++ix) {
            const float a = m0.layers[0].values[m0.index_of(ix, iy)];
            const float b = m1.layers[0].values[m1.index_of(ix + shift, iy)];
            if (std::isnan(a) || std::isnan(b)) continue;  // border invalidation differs
            // only compare where the source disk stayed fully inside the
            // untranslated raster too
            if (ix - 5 < 0 || ix + 5 + shift >= 60) continue;
            CHECK(a == b);
        }
}

TEST_CASE("ratio map save/load") {
    const auto dir = temp_dir();
    const auto raster = brmtest::random_raster(21, 48, 40, 0.35);
    const double radii[] = {7, 3};
    const auto map = generate_with_radii(raster, CameraConfig{}, radii, 2);

    save(map, dir / "m.brm");
    const auto back = load(dir / "m.brm");
    CHECK(maps_equal(map, back));

    // corrupt the magic
    {
        std::fstream f(dir / "m.brm", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    try {
        load(dir / "m.brm");
        FAIL("expected a magic error");
    } catch (const Error& e) {
        CHECK(e.code() == "bad_magic");
    }

    { std::ofstream empty(dir / "empty.brm", std::ios::binary); }
    CHECK_THROWS_AS(load(dir / "empty.brm"), Error);

    // truncation mid-values
    save(map, dir / "t.brm");
    const auto full_size = fs::file_size(dir / "t.brm");
    fs::resize_file(dir / "t.brm", full_size - 13);
    CHECK_THROWS_AS(load(dir / "t.brm"), Error);
}

TEST_CASE("generate input validation") {
    const auto raster = brmtest::random_raster(4, 30, 30, 0.5);
    CameraConfig cam;
    CHECK_THROWS_AS(generate(raster, cam, 0, 1), Error);
    CHECK_THROWS_AS(generate(raster, cam, 3, 0), Error);
    const double bad_order[] = {3, 5};
    CHECK_THROWS_AS(generate_with_radii(raster, cam, bad_order, 1), Error);
    const double equal_radii[] = {5, 5};
    CHECK_THROWS_AS(generate_with_radii(raster, cam, equal_radii, 1), Error);
}
