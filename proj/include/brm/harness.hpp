#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brm/matcher.hpp"
#include "brm/ratio_map.hpp"
#include "brm/sim.hpp"

namespace brm {

/// Everything one experiment needs. Loadable from a flat key = value text
/// file; CLI flags override file values. Defaults follow the standard
/// parameter set (n=3, alpha=43 deg, z_l=150 m, e1=0.3, eps=25 m,
/// d_max=75 m).
struct ExperimentConfig {
    // inputs
    std::string polygons_path;   // GeoJSON, or
    std::string raster_path;     // PGM + .geo sidecar
    std::string ratio_map_path;  // optional cache; generated and saved when missing
    std::string plan_path;
    std::string out_dir;

    int n = 3;
    CameraConfig camera;
    MatcherConfig matcher;
    int stride = 10;
    int frame_h = 480;

    // raster geometry when building from polygons; raster_w/raster_h = 0
    // derives extent from the polygon bounding box
    double resolution = 0.5;
    double origin_x = 0, origin_y = 0;
    bool origin_set = false;
    int raster_w = 0, raster_h = 0;

    std::uint64_t seed = 1;
    double flip_prob = 0;
    double scale_bias = 0;
    double sigma_d = 0;
    bool record_candidates = false;

    std::optional<FlightPlan> plan;  // set directly, or loaded from plan_path

    void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies "key=value" overrides on top of a parsed config.
void apply_overrides(ExperimentConfig& cfg, std::span<const std::string> overrides);

struct FrameRecord {
    int i = 0;
    double t = 0;
    Point truth;
    Point estimate;
    Point dead_reckoning;
    std::size_t candidates = 0;
    Phase phase = Phase::Searching;
    double error = 0;  // |estimate - truth|
};

struct EventRecord {
    int frame = 0;
    Point estimate;
    double spread = 0;
    double error = 0;           // |estimate - truth| at the event
    double distance_flown = 0;  // true path length up to the event
};

/// Lattice geometry plus a grayscale background used for heat maps.
struct MapMeta {
    int lattice_w = 0;
    int lattice_h = 0;
    int stride = 1;
    GeoTransform transform;
    std::vector<std::uint8_t> background;  // lattice_w * lattice_h
};

struct ExperimentReport {
    std::vector<FrameRecord> frames;
    std::vector<EventRecord> events;
    double rmse_whole_path = 0;
    std::optional<double> rmse_after_first_convergence;
    double rmse_dead_reckoning_whole_path = 0;
    std::optional<double> rmse_dead_reckoning_after_first_convergence;
    MapMeta meta;
    std::vector<std::vector<Candidate>> candidate_dumps;  // per frame when recorded
};

/// sqrt(mean squared Euclidean error) over paired points.
double rmse(std::span<const Point> estimates, std::span<const Point> truths);

/// Loads or builds the raster and ratio map for a config.
BuildingRaster load_or_build_raster(const ExperimentConfig& cfg);
RatioMapSet load_or_build_ratio_map(const ExperimentConfig& cfg, const BuildingRaster& raster);

/// Grayscale backdrop for heat maps: the raster sampled at lattice cell
/// centers (building = 96, free = 255).
std::vector<std::uint8_t> lattice_background(const BuildingRaster& raster, const RatioMapSet& map);

/// End to end: raster -> ratio map -> simulated flight -> matcher steps ->
/// metrics. Fully deterministic given the config seeds.
ExperimentReport run(const ExperimentConfig& cfg);

/// Core localization loop over pre-rendered frames and odometry distances;
/// run() and the offline CLI path both go through here.
ExperimentReport run_localization(const RatioMapSet& map, const ExperimentConfig& cfg,
                                  std::span<const FrameMask> frames,
                                  std::span<const OdometryDelta> deltas,
                                  std::span<const TruePose> truth);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(std::string_view text);
/// Equality over the JSON-carried fields (frames, events, rmse values).
bool report_equal(const ExperimentReport& a, const ExperimentReport& b);

/// Writes trajectory.csv, report.json and, when dumps were recorded,
/// candidates_<i>.csv and heatmap_<i>.png. Re-export is idempotent.
void export_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Deterministic synthetic city: mixed-density districts of rectangular
/// buildings (some rotated, some with courtyard holes) over a
/// world_w x world_h meter area, as a GeoJSON FeatureCollection.
std::string synth_city_geojson(std::uint64_t seed, double world_w = 2000, double world_h = 2000);

/// 8-bit grayscale PNG (used for candidate heat maps).
void write_png_gray(const std::filesystem::path& path, const std::uint8_t* data, int w, int h);

}  // namespace brm
