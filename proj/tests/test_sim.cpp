#include <doctest.h>

#include <cmath>
#include <numbers>

#include "brm/feature.hpp"
#include "brm/sim.hpp"
#include "helpers.hpp"

using namespace brm;

namespace {

FlightPlan straight_plan() {
    FlightPlan plan;
    plan.waypoints = {{0, 0}, {100, 0}};
    plan.speed = 5;
    plan.frame_interval = 5;
    plan.altitude = 150;
    return plan;
}

FlightPlan square_plan() {
    FlightPlan plan;
    plan.waypoints = {{0, 0}, {250, 0}, {250, 250}, {0, 250}, {0, 0}};
    plan.speed = 5;
    plan.frame_interval = 5;
    return plan;
}

BuildingRaster raster_from_grid(const BitGrid& bits, GeoTransform t) {
    BuildingRaster r;
    r.width = bits.width();
    r.height = bits.height();
    r.transform = t;
    r.cells = bits;
    return r;
}

}  // namespace

TEST_CASE("trajectory samples a straight leg every interval") {
    const auto poses = gen_trajectory(straight_plan());
    REQUIRE(poses.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(poses[i].t == i * 5.0);
        CHECK(poses[i].x == i * 25.0);
        CHECK(poses[i].y == 0.0);
        CHECK(poses[i].z == 150.0);
        CHECK(poses[i].yaw == 0.0);
    }
}

TEST_CASE("square path: vertex samples take the outgoing leg") {
    const auto poses = gen_trajectory(square_plan());
    REQUIRE(poses.size() == 41);  // 1000 m at 25 m per frame

    CHECK(poses[0].yaw == 0.0);
    // s = 250: corner (250,0), heading turns north
    CHECK(poses[10].x == 250.0);
    CHECK(poses[10].y == 0.0);
    CHECK(poses[10].yaw == doctest::Approx(std::numbers::pi / 2));
    // s = 500: corner (250,250), heading west
    CHECK(poses[20].x == 250.0);
    CHECK(poses[20].y == 250.0);
    CHECK(poses[20].yaw == doctest::Approx(std::numbers::pi));
    // s = 750: corner (0,250), heading south
    CHECK(poses[30].x == 0.0);
    CHECK(poses[30].y == 250.0);
    CHECK(poses[30].yaw == doctest::Approx(-std::numbers::pi / 2));
    // path end keeps the final leg's heading
    CHECK(poses[40].x == 0.0);
    CHECK(poses[40].y == 0.0);
    CHECK(poses[40].yaw == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("trajectory stops at the last whole step") {
    FlightPlan plan = straight_plan();
    plan.waypoints = {{0, 0}, {0, 60}};  // 60 m is not a multiple of 25
    const auto poses = gen_trajectory(plan);
    REQUIRE(poses.size() == 3);
    CHECK(poses.back().y == doctest::Approx(50.0));
    CHECK(poses.back().yaw == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("flight plan validation") {
    FlightPlan plan = straight_plan();
    plan.waypoints = {{0, 0}};
    CHECK_THROWS_AS(plan.validate(), Error);

    plan = straight_plan();
    plan.waypoints = {{0, 0}, {0, 0}, {10, 0}};  // zero-length leg
    CHECK_THROWS_AS(plan.validate(), Error);

    plan = straight_plan();
    plan.speed = 0;
    CHECK_THROWS_AS(plan.validate(), Error);
    plan = straight_plan();
    plan.frame_interval = -1;
    CHECK_THROWS_AS(plan.validate(), Error);
    plan = straight_plan();
    plan.altitude = 0;
    CHECK_THROWS_AS(plan.validate(), Error);
}

TEST_CASE("flight plan JSON round trip") {
    FlightPlan plan = square_plan();
    plan.altitude = 120;
    const auto text = flight_plan_json(plan);
    const auto back = parse_flight_plan(text);
    REQUIRE(back.waypoints.size() == plan.waypoints.size());
    for (std::size_t i = 0; i < plan.waypoints.size(); ++i) {
        CHECK(back.waypoints[i].x == plan.waypoints[i].x);
        CHECK(back.waypoints[i].y == plan.waypoints[i].y);
    }
    CHECK(back.speed == plan.speed);
    CHECK(back.frame_interval == plan.frame_interval);
    CHECK(back.altitude == plan.altitude);

    // omitted fields fall back to defaults
    const auto sparse = parse_flight_plan(R"({"waypoints": [[0,0],[50,0]]})");
    CHECK(sparse.speed == 5.0);
    CHECK(sparse.frame_interval == 5.0);
    CHECK(sparse.altitude == 150.0);
}

TEST_CASE("flight plan parse errors") {
    CHECK_THROWS_WITH_AS(parse_flight_plan("{nope"), doctest::Contains("malformed"), Error);
    CHECK_THROWS_AS(parse_flight_plan(R"({"speed": 5})"), Error);
    CHECK_THROWS_AS(parse_flight_plan(R"({"waypoints": [[0,0],[1]]})"), Error);
    CHECK_THROWS_AS(parse_flight_plan(R"({"waypoints": [[0,0],[0,0]]})"), Error);

    try {
        parse_flight_plan("{nope");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == "parse_error");
    }
}

TEST_CASE("render_frame copies the raster window 1:1 when scales match") {
    // 1 m cells, fov 90 deg at z = 16.5 gives a 33 px frame at 1 m/px
    BitGrid grid(64, 64);
    brmtest::TestRng rng(42);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (rng.chance(0.35)) grid.set(x, y, true);
    const auto raster = raster_from_grid(grid, {0, 0, 1.0});

    CameraConfig cam;
    cam.fov_alpha_deg = 90;
    cam.altitude_zl = 16.5;
    cam.frame_w = cam.frame_h = 33;

    TruePose pose;
    pose.x = 32;
    pose.y = 32;
    pose.z = 16.5;
    pose.yaw = 0;

    const auto frame = render_frame(raster, pose, cam, 33, 7);
    CHECK(frame.index == 7);
    REQUIRE(frame.side() == 33);
    for (int py = 0; py < 33; ++py)
        for (int px = 0; px < 33; ++px)
            REQUIRE(frame.bits.get(px, py) == grid.get(16 + px, 16 + py));
}

TEST_CASE("render_frame over uniform rasters") {
    BitGrid full(32, 32);
    for (int y = 0; y < 32; ++y) full.set_row_range(y, 0, 31);
    const auto solid = raster_from_grid(full, {0, 0, 1.0});

    CameraConfig cam;
    cam.fov_alpha_deg = 90;
    cam.altitude_zl = 8;

    TruePose pose;
    pose.x = 15;
    pose.y = 15;
    pose.z = 8;
    pose.yaw = 0.3;

    const auto frame = render_frame(solid, pose, cam, 15);
    CHECK(frame.bits.count_all() == 15 * 15);

    const auto empty = raster_from_grid(BitGrid(32, 32), {0, 0, 1.0});
    CHECK(render_frame(empty, pose, cam, 15).bits.count_all() == 0);
}

TEST_CASE("render_frame rejects a footprint outside the raster") {
    const auto raster = raster_from_grid(BitGrid(32, 32), {0, 0, 1.0});
    CameraConfig cam;
    cam.fov_alpha_deg = 90;
    cam.altitude_zl = 8;

    TruePose pose;
    pose.x = 2;  // window [-6, 10] leaves the grid
    pose.y = 15;
    pose.z = 8;

    try {
        render_frame(raster, pose, cam, 17, 3);
        FAIL("expected out_of_map");
    } catch (const Error& e) {
        CHECK(e.code() == "out_of_map");
        CHECK(std::string(e.what()).find("frame 3") != std::string::npos);
    }

    CHECK_THROWS_AS(render_frame(raster, pose, cam, 0), Error);
}

TEST_CASE("features are yaw-invariant when sampling is lossless") {
    // quarter-turn with 1:1 nearest-neighbor sampling permutes the same
    // cells, so the disk ratios match exactly up to rounding
    const auto mask = brmtest::blocky_raster(9, 96, 96, 14, {0, 0, 1.0});
    CameraConfig cam;
    cam.fov_alpha_deg = 90;
    cam.altitude_zl = 16.5;

    TruePose pose;
    pose.x = 48;
    pose.y = 48;
    pose.z = 16.5;

    pose.yaw = 0;
    const auto f0 = extract(render_frame(mask, pose, cam, 33), 3);
    pose.yaw = std::numbers::pi / 2;
    const auto f90 = extract(render_frame(mask, pose, cam, 33), 3);
    pose.yaw = 0.7;  // arbitrary angle: resampling error stays small
    const auto fr = extract(render_frame(mask, pose, cam, 33), 3);

    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(f0[k] - f90[k]) <= 0.05);
        CHECK(std::abs(f0[k] - fr[k]) <= 0.2);
    }
}

TEST_CASE("odometry distances") {
    const auto poses = gen_trajectory(straight_plan());

    SUBCASE("noise-free deltas are exact step lengths") {
        const auto deltas = odometry(poses, {});
        REQUIRE(deltas.size() == 4);
        for (const auto& d : deltas) CHECK(d.d == 25.0);
    }

    SUBCASE("scale bias multiplies the true distance") {
        OdometryNoiseModel noise;
        noise.scale_bias = 0.01;
        const auto deltas = odometry(poses, noise);
        for (const auto& d : deltas) CHECK(d.d == doctest::Approx(25.25));
    }

    SUBCASE("white noise is seed-deterministic") {
        OdometryNoiseModel noise;
        noise.sigma_d = 2.0;
        noise.seed = 99;
        const auto a = odometry(poses, noise);
        const auto b = odometry(poses, noise);
        bool same = true, nonzero_noise = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            same &= a[i].d == b[i].d;
            nonzero_noise |= a[i].d != 25.0;
        }
        CHECK(same);
        CHECK(nonzero_noise);

        noise.seed = 100;
        const auto c = odometry(poses, noise);
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].d != c[i].d;
        CHECK(differs);
    }

    SUBCASE("negative draws clamp to zero") {
        OdometryNoiseModel noise;
        noise.scale_bias = -2.0;  // drives every measurement negative
        for (const auto& d : odometry(poses, noise)) CHECK(d.d == 0.0);
    }

    SUBCASE("input validation") {
        CHECK_THROWS_AS(odometry(std::vector<TruePose>(1), {}), Error);
        OdometryNoiseModel noise;
        noise.sigma_d = -1;
        CHECK_THROWS_AS(odometry(poses, noise), Error);
    }
}

TEST_CASE("segmentation corruption") {
    FrameMask frame;
    frame.index = 4;
    frame.bits = BitGrid(128, 128);
    brmtest::TestRng rng(7);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
            if (rng.chance(0.5)) frame.bits.set(x, y, true);

    SUBCASE("zero probability is the identity") {
        CHECK(corrupt(frame, {0, 11}).bits == frame.bits);
    }

    SUBCASE("probability one complements every pixel") {
        const auto flipped = corrupt(frame, {1, 11});
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x)
                REQUIRE(flipped.bits.get(x, y) != frame.bits.get(x, y));
    }

    SUBCASE("flip fraction tracks the probability") {
        const auto noisy = corrupt(frame, {0.1, 11});
        std::int64_t flips = 0;
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x)
                flips += noisy.bits.get(x, y) != frame.bits.get(x, y);
        const double frac = static_cast<double>(flips) / (128.0 * 128.0);
        CHECK(frac > 0.08);
        CHECK(frac < 0.12);
    }

    SUBCASE("stream is keyed on seed and frame index") {
        const auto a = corrupt(frame, {0.1, 11});
        const auto b = corrupt(frame, {0.1, 11});
        CHECK(a.bits == b.bits);

        FrameMask other = frame;
        other.index = 5;
        const auto c = corrupt(other, {0.1, 11});
        CHECK_FALSE(a.bits == c.bits);

        const auto d = corrupt(frame, {0.1, 12});
        CHECK_FALSE(a.bits == d.bits);
    }

    SUBCASE("probability bounds") {
        CHECK_THROWS_AS(corrupt(frame, {-0.1, 0}), Error);
        CHECK_THROWS_AS(corrupt(frame, {1.5, 0}), Error);
    }
}

TEST_CASE("dead reckoning integrates noisy distances along true headings") {
    const auto poses = gen_trajectory(square_plan());

    SUBCASE("noise-free reckoning reproduces the truth") {
        const auto deltas = odometry(poses, {});
        const auto track = dead_reckon({0, 0}, poses, deltas);
        REQUIRE(track.size() == poses.size());
        for (std::size_t i = 0; i < track.size(); ++i) {
            CHECK(track[i].x == doctest::Approx(poses[i].x).epsilon(1e-12));
            CHECK(track[i].y == doctest::Approx(poses[i].y).epsilon(1e-12));
        }
    }

    SUBCASE("scale bias accumulates along the path") {
        OdometryNoiseModel noise;
        noise.scale_bias = 0.1;
        const auto deltas = odometry(poses, noise);
        const auto track = dead_reckon({0, 0}, poses, deltas);
        // after the first 250 m leg the error is 10 percent of the flown distance
        CHECK(track[10].x == doctest::Approx(275.0));
        CHECK(track[10].y == doctest::Approx(0.0));
    }

    SUBCASE("length mismatch is rejected") {
        const auto deltas = odometry(poses, {});
        CHECK_THROWS_AS(
            dead_reckon({0, 0}, poses, std::span(deltas).subspan(0, deltas.size() - 1)), Error);
    }
}
