#include "brm/sim.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace brm {

void FlightPlan::validate() const {
    if (waypoints.size() < 2) throw Error("bad_plan", "flight plan needs at least 2 waypoints");
    if (!(speed > 0)) throw Error("bad_plan", "speed must be positive");
    if (!(frame_interval > 0)) throw Error("bad_plan", "frame interval must be positive");
    if (!(altitude > 0)) throw Error("bad_plan", "altitude must be positive");
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        const double leg = std::hypot(waypoints[i].x - waypoints[i - 1].x,
                                      waypoints[i].y - waypoints[i - 1].y);
        if (!(leg > 0))
            throw Error("bad_plan", "zero-length leg at waypoint " + std::to_string(i));
    }
}

FlightPlan parse_flight_plan(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("parse_error", std::string("malformed flight plan JSON: ") + e.what());
    }
    FlightPlan plan;
    if (!doc.contains("waypoints") || !doc["waypoints"].is_array())
        throw Error("bad_plan", "flight plan has no waypoints array");
    for (const auto& wp : doc["waypoints"]) {
        if (!wp.is_array() || wp.size() != 2)
            throw Error("bad_plan", "waypoint is not an [x, y] pair");
        plan.waypoints.push_back({wp[0].get<double>(), wp[1].get<double>()});
    }
    plan.speed = doc.value("speed", plan.speed);
    plan.frame_interval = doc.value("frame_interval", plan.frame_interval);
    plan.altitude = doc.value("altitude", plan.altitude);
    plan.validate();
    return plan;
}

std::string flight_plan_json(const FlightPlan& plan) {
    nlohmann::ordered_json doc;
    doc["waypoints"] = nlohmann::ordered_json::array();
    for (const auto& wp : plan.waypoints) doc["waypoints"].push_back({wp.x, wp.y});
    doc["speed"] = plan.speed;
    doc["frame_interval"] = plan.frame_interval;
    doc["altitude"] = plan.altitude;
    return doc.dump(2) + "\n";
}

FlightPlan load_flight_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open flight plan " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_flight_plan(buf.str());
}

std::vector<TruePose> gen_trajectory(const FlightPlan& plan) {
    plan.validate();
    struct Leg {
        Point a, b;
        double len, yaw;
    };
    std::vector<Leg> legs;
    double total = 0;
    for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
        const Point a = plan.waypoints[i - 1], b = plan.waypoints[i];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        legs.push_back({a, b, len, std::atan2(b.y - a.y, b.x - a.x)});
        total += len;
    }

    const double step = plan.speed * plan.frame_interval;
    const int count = static_cast<int>(std::floor(total / step + 1e-9)) + 1;
    std::vector<TruePose> poses;
    poses.reserve(count);
    for (int i = 0; i < count; ++i) {
        double s = std::min(i * step, total);
        std::size_t li = 0;
        // a sample exactly on a vertex belongs to the outgoing leg
        while (li + 1 < legs.size() && s >= legs[li].len) s -= legs[li].len, ++li;
        const Leg& leg = legs[li];
        const double u = std::min(s / leg.len, 1.0);
        poses.push_back({i * plan.frame_interval, leg.a.x + u * (leg.b.x - leg.a.x),
                         leg.a.y + u * (leg.b.y - leg.a.y), plan.altitude, leg.yaw});
    }
    return poses;
}

FrameMask render_frame(const BuildingRaster& raster, const TruePose& pose,
                       const CameraConfig& camera, int h, int frame_index) {
    camera.validate();
    if (h < 1) throw Error("bad_frame", "frame side must be positive");
    if (!(pose.z > 0)) throw Error("bad_pose", "pose height must be positive");

    const double half_width = pose.z * std::tan(camera.fov_alpha_deg * std::numbers::pi / 360.0);
    const double fres = 2.0 * half_width / h;  // frame meters per pixel
    const int c = h / 2;
    const double cos_yaw = std::cos(pose.yaw), sin_yaw = std::sin(pose.yaw);
    const GeoTransform& t = raster.transform;

    BitGrid bits(h, h);
    for (int py = 0; py < h; ++py) {
        const double v = (py - c) * fres;
        for (int px = 0; px < h; ++px) {
            const double u = (px - c) * fres;
            const double wx = pose.x + cos_yaw * u - sin_yaw * v;
            const double wy = pose.y + sin_yaw * u + cos_yaw * v;
            const int gx = static_cast<int>(std::lround((wx - t.origin_x) / t.resolution));
            const int gy = static_cast<int>(std::lround((wy - t.origin_y) / t.resolution));
            if (gx < 0 || gx >= raster.width || gy < 0 || gy >= raster.height) {
                std::ostringstream msg;
                msg << "frame " << frame_index << " footprint at (" << pose.x << ", " << pose.y
                    << ") yaw " << pose.yaw << " exits the raster";
                throw Error("out_of_map", msg.str());
            }
            if (raster.cells.get(gx, gy)) bits.set(px, py, true);
        }
    }
    return {frame_index, pose.t, std::move(bits)};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<OdometryDelta> odometry(std::span<const TruePose> poses,
                                    const OdometryNoiseModel& noise) {
    if (poses.size() < 2) throw Error("bad_plan", "odometry needs at least 2 poses");
    if (noise.sigma_d < 0) throw Error("bad_config", "sigma_d must be non-negative");
    std::mt19937_64 rng(splitmix64(noise.seed));
    std::normal_distribution<double> gauss(0.0, noise.sigma_d > 0 ? noise.sigma_d : 1.0);
    std::vector<OdometryDelta> out;
    out.reserve(poses.size() - 1);
    for (std::size_t i = 1; i < poses.size(); ++i) {
        const double d = std::hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y);
        double noisy = d * (1.0 + noise.scale_bias);
        if (noise.sigma_d > 0) noisy += gauss(rng);
        out.push_back({std::max(noisy, 0.0)});
    }
    return out;
}

FrameMask corrupt(const FrameMask& frame, const SegmentationNoiseModel& noise) {
    if (noise.flip_prob < 0 || noise.flip_prob > 1)
        throw Error("bad_config", "flip probability must be in [0, 1]");
    if (noise.flip_prob == 0) return frame;
    // stream keyed on (seed, frame index) so a sequence of frames does not
    // repeat one flip pattern
    std::mt19937_64 rng(splitmix64(noise.seed ^ splitmix64(static_cast<std::uint64_t>(frame.index) + 1)));
    std::bernoulli_distribution flip(noise.flip_prob);
    FrameMask out{frame.index, frame.t, BitGrid(frame.side(), frame.side())};
    for (int y = 0; y < frame.side(); ++y)
        for (int x = 0; x < frame.side(); ++x) {
            bool v = frame.bits.get(x, y);
            if (flip(rng)) v = !v;
            if (v) out.bits.set(x, y, true);
        }
    return out;
}

std::vector<Point> dead_reckon(Point start, std::span<const TruePose> poses,
                               std::span<const OdometryDelta> deltas) {
    if (poses.size() != deltas.size() + 1)
        throw Error("bad_state", "dead reckoning needs one delta per pose transition");
    std::vector<Point> out;
    out.reserve(poses.size());
    out.push_back(start);
    double ux = 0, uy = 0;  // last valid direction carries through hover steps
    for (std::size_t i = 1; i < poses.size(); ++i) {
        const double dx = poses[i].x - poses[i - 1].x, dy = poses[i].y - poses[i - 1].y;
        const double d = std::hypot(dx, dy);
        if (d > 0) {
            ux = dx / d;
            uy = dy / d;
        }
        out.push_back({out.back().x + deltas[i - 1].d * ux, out.back().y + deltas[i - 1].d * uy});
    }
    return out;
}

}  // namespace brm
