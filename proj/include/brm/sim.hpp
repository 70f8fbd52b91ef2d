#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "brm/feature.hpp"
#include "brm/geo.hpp"
#include "brm/matcher.hpp"
#include "brm/ratio_map.hpp"

namespace brm {

struct TruePose {
    double t = 0;
    double x = 0, y = 0;
    double z = 150.0;
    double yaw = 0;  // radians
};

struct FlightPlan {
    std::vector<Point> waypoints;
    double speed = 5.0;           // m/s
    double frame_interval = 5.0;  // seconds between matched frames
    double altitude = 150.0;      // meters

    void validate() const;
};

FlightPlan parse_flight_plan(std::string_view json_text);
std::string flight_plan_json(const FlightPlan& plan);
FlightPlan load_flight_plan(const std::filesystem::path& path);

/// Multiplicative drift plus per-step white noise on traveled distance.
struct OdometryNoiseModel {
    double scale_bias = 0;
    double sigma_d = 0;  // meters
    std::uint64_t seed = 0;
};

/// Per-pixel i.i.d. flips, probability flip_prob, stream keyed on
/// (seed, frame index).
struct SegmentationNoiseModel {
    double flip_prob = 0;
    std::uint64_t seed = 0;
};

/// Poses sampled every frame_interval along the piecewise-linear waypoint
/// path at constant speed; yaw follows the leg containing the sample (a
/// sample exactly on a vertex takes the outgoing leg).
std::vector<TruePose> gen_trajectory(const FlightPlan& plan);

/// h x h mask sampled nearest-neighbor from the raster over the
/// yaw-rotated ground window of half-width z*tan(alpha/2) centered at the
/// pose. Throws an out-of-map error when the footprint exits the raster.
FrameMask render_frame(const BuildingRaster& raster, const TruePose& pose,
                       const CameraConfig& camera, int h, int frame_index = 0);

/// d_i = |p_i - p_{i-1}| * (1 + scale_bias) + N(0, sigma_d), clamped at 0.
std::vector<OdometryDelta> odometry(std::span<const TruePose> poses,
                                    const OdometryNoiseModel& noise);

FrameMask corrupt(const FrameMask& frame, const SegmentationNoiseModel& noise);

/// Odometry-only position integration from `start`, using noisy distances
/// along the true per-step directions (the noise model carries no heading
/// error). This is the dead-reckoning baseline trajectory.
std::vector<Point> dead_reckon(Point start, std::span<const TruePose> poses,
                               std::span<const OdometryDelta> deltas);

}  // namespace brm
