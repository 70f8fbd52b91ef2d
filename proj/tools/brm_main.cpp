// brm: building-ratio-map localization toolkit.
//
// Subcommands cover the whole pipeline: synth-map -> rasterize ->
// ratio-map -> simulate -> localize, with evaluate running everything in
// one shot and plot rendering PNG overviews from a finished run.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brm/feature.hpp"
#include "brm/geo.hpp"
#include "brm/harness.hpp"
#include "brm/matcher.hpp"
#include "brm/ratio_map.hpp"
#include "brm/sim.hpp"

namespace fs = std::filesystem;
using brm::Error;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << text;
    if (!out) throw Error("io", "short write to " + path.string());
}

brm::ExperimentConfig config_from(const std::string& config_path,
                                  const std::vector<std::string>& overrides) {
    brm::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = brm::load_config(config_path);
    brm::apply_overrides(cfg, overrides);
    return cfg;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

double csv_num(const std::vector<std::string>& fields, std::size_t idx, const fs::path& path,
               int line_no) {
    if (idx >= fields.size())
        throw Error("parse_error",
                    path.string() + ":" + std::to_string(line_no) + " has too few columns");
    try {
        return std::stod(fields[idx]);
    } catch (const std::exception&) {
        throw Error("parse_error", path.string() + ":" + std::to_string(line_no) +
                                       " column " + std::to_string(idx) + " is not a number");
    }
}

// ---- dataset layout written by `simulate`, consumed by `localize` ----

fs::path frame_path(const fs::path& dir, std::size_t i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    return dir / "frames" / name;
}

void write_dataset(const fs::path& dir, const std::vector<brm::TruePose>& truth,
                   const std::vector<brm::OdometryDelta>& deltas,
                   const std::vector<brm::FrameMask>& frames, int n) {
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) throw Error("io", "cannot create dataset directory " + dir.string());

    // full 17-digit precision so a replay from disk is bit-identical
    {
        std::ofstream out(dir / "truth.csv", std::ios::binary);
        out << "i,t,x,y,z,yaw\n";
        char buf[256];
        for (std::size_t i = 0; i < truth.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, truth[i].t,
                          truth[i].x, truth[i].y, truth[i].z, truth[i].yaw);
            out << buf;
        }
        if (!out) throw Error("io", "short write to truth.csv");
    }
    {
        std::ofstream out(dir / "odometry.csv", std::ios::binary);
        out << "i,d\n";
        char buf[64];
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, deltas[i].d);
            out << buf;
        }
        if (!out) throw Error("io", "short write to odometry.csv");
    }
    {
        std::ofstream out(dir / "features.csv", std::ios::binary);
        out << "i";
        for (int k = 1; k <= n; ++k) out << ",f" << k;
        out << "\n";
        for (const auto& frame : frames)
            brm::append_feature_csv(out, frame.index, brm::extract(frame, n));
        if (!out) throw Error("io", "short write to features.csv");
    }
    for (std::size_t i = 0; i < frames.size(); ++i)
        brm::write_pgm(frame_path(dir, i), frames[i].bits);
}

void read_dataset(const fs::path& dir, std::vector<brm::TruePose>& truth,
                  std::vector<brm::OdometryDelta>& deltas, std::vector<brm::FrameMask>& frames) {
    {
        std::ifstream in(dir / "truth.csv");
        if (!in) throw Error("io", "cannot open " + (dir / "truth.csv").string());
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no == 1 || line.empty()) continue;
            const auto f = split_csv_line(line);
            truth.push_back({csv_num(f, 1, dir / "truth.csv", line_no),
                             csv_num(f, 2, dir / "truth.csv", line_no),
                             csv_num(f, 3, dir / "truth.csv", line_no),
                             csv_num(f, 4, dir / "truth.csv", line_no),
                             csv_num(f, 5, dir / "truth.csv", line_no)});
        }
    }
    {
        std::ifstream in(dir / "odometry.csv");
        if (!in) throw Error("io", "cannot open " + (dir / "odometry.csv").string());
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no == 1 || line.empty()) continue;
            const auto f = split_csv_line(line);
            deltas.push_back({csv_num(f, 1, dir / "odometry.csv", line_no)});
        }
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto path = frame_path(dir, i);
        if (!fs::exists(path)) throw Error("io", "missing frame image " + path.string());
        frames.push_back({static_cast<int>(i), truth[i].t, brm::read_pgm(path)});
    }
}

// ---- subcommand bodies ----

int cmd_synth_map(const std::string& out, std::uint64_t seed, double world_w, double world_h) {
    spit(out, brm::synth_city_geojson(seed, world_w, world_h));
    std::cout << "wrote " << out << " (seed " << seed << ", " << world_w << " x " << world_h
              << " m)\n";
    return 0;
}

int cmd_rasterize(const std::string& polygons, const std::string& out, double resolution,
                  std::optional<double> origin_x, std::optional<double> origin_y, int width,
                  int height) {
    brm::ExperimentConfig cfg;
    cfg.polygons_path = polygons;
    cfg.resolution = resolution;
    if (origin_x || origin_y) {
        cfg.origin_x = origin_x.value_or(0);
        cfg.origin_y = origin_y.value_or(0);
        cfg.origin_set = true;
    }
    cfg.raster_w = width;
    cfg.raster_h = height;
    const auto raster = brm::load_or_build_raster(cfg);
    brm::save_raster(out, raster);
    std::printf("wrote %s: %d x %d cells at %.3f m, building fraction %.4f\n", out.c_str(),
                raster.width, raster.height, raster.transform.resolution,
                raster.building_fraction());
    return 0;
}

int cmd_ratio_map(const std::string& raster_path, const std::string& out, int n, int stride,
                  double alpha_deg, double altitude) {
    const auto raster = brm::load_raster(raster_path);
    brm::CameraConfig camera;
    camera.fov_alpha_deg = alpha_deg;
    camera.altitude_zl = altitude;
    const auto map = brm::generate(raster, camera, n, stride);
    brm::save(map, out);
    std::printf("wrote %s: %d layers on a %d x %d lattice (stride %d)\n", out.c_str(), map.n,
                map.lattice_w, map.lattice_h, map.stride);
    for (const auto& layer : map.layers)
        std::printf("  layer %d: ground radius %.3f m = %d cells\n", layer.k,
                    layer.ground_radius_m, layer.radius_px);
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& out_override) {
    auto cfg = config_from(config_path, overrides);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (cfg.out_dir.empty()) throw Error("bad_config", "simulate needs an out_dir");
    cfg.validate();

    const auto plan = cfg.plan ? *cfg.plan : brm::load_flight_plan(cfg.plan_path);
    const auto raster = brm::load_or_build_raster(cfg);
    const auto truth = brm::gen_trajectory(plan);

    std::vector<brm::FrameMask> frames;
    const brm::SegmentationNoiseModel seg_noise{cfg.flip_prob, cfg.seed};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        try {
            auto frame =
                brm::render_frame(raster, truth[i], cfg.camera, cfg.frame_h, static_cast<int>(i));
            frames.push_back(cfg.flip_prob > 0 ? brm::corrupt(frame, seg_noise)
                                               : std::move(frame));
        } catch (const Error& e) {
            throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.what());
        }
    }
    const auto deltas = brm::odometry(truth, {cfg.scale_bias, cfg.sigma_d, cfg.seed});

    write_dataset(cfg.out_dir, truth, deltas, frames, cfg.n);
    std::printf("wrote %zu frames to %s (%.1f m flown)\n", frames.size(), cfg.out_dir.c_str(),
                (truth.size() - 1) * plan.speed * plan.frame_interval);
    return 0;
}

int cmd_localize(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& dataset, const std::string& out_override) {
    auto cfg = config_from(config_path, overrides);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (cfg.out_dir.empty()) throw Error("bad_config", "localize needs an out_dir");

    std::vector<brm::TruePose> truth;
    std::vector<brm::OdometryDelta> deltas;
    std::vector<brm::FrameMask> frames;
    read_dataset(dataset, truth, deltas, frames);

    const auto raster = brm::load_or_build_raster(cfg);
    const auto map = brm::load_or_build_ratio_map(cfg, raster);
    auto report = brm::run_localization(map, cfg, frames, deltas, truth);
    report.meta.background = brm::lattice_background(raster, map);
    brm::export_report(report, cfg.out_dir);

    std::printf("localized %zu frames: %zu convergence events, rmse %.3f m (dead reckoning "
                "%.3f m)\n",
                report.frames.size(), report.events.size(), report.rmse_whole_path,
                report.rmse_dead_reckoning_whole_path);
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& out_override) {
    auto cfg = config_from(config_path, overrides);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (cfg.out_dir.empty()) throw Error("bad_config", "evaluate needs an out_dir");

    const auto report = brm::run(cfg);
    brm::export_report(report, cfg.out_dir);

    std::printf("frames %zu, events %zu\n", report.frames.size(), report.events.size());
    for (const auto& ev : report.events)
        std::printf("  convergence at frame %d: error %.3f m, spread %.3f m, %.1f m flown\n",
                    ev.frame, ev.error, ev.spread, ev.distance_flown);
    std::printf("rmse whole path: %.3f m (dead reckoning %.3f m)\n", report.rmse_whole_path,
                report.rmse_dead_reckoning_whole_path);
    if (report.rmse_after_first_convergence)
        std::printf("rmse after first convergence: %.3f m (dead reckoning %.3f m)\n",
                    *report.rmse_after_first_convergence,
                    report.rmse_dead_reckoning_after_first_convergence.value_or(0));
    return 0;
}

// Bresenham-style segment draw onto a grayscale canvas.
void draw_segment(std::vector<std::uint8_t>& img, int w, int h, double x0, double y0, double x1,
                  double y1, std::uint8_t value) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
    for (int s = 0; s <= steps; ++s) {
        const double u = static_cast<double>(s) / steps;
        const int px = static_cast<int>(std::lround(x0 + u * (x1 - x0)));
        const int py = static_cast<int>(std::lround(y0 + u * (y1 - y0)));
        if (px >= 0 && px < w && py >= 0 && py < h)
            img[static_cast<std::size_t>(py) * w + px] = value;
    }
}

int cmd_plot(const std::string& dir_arg) {
    const fs::path dir = dir_arg;
    const auto report = brm::report_from_json(slurp(dir / "report.json"));
    const int w = report.meta.lattice_w, h = report.meta.lattice_h;
    if (w < 1 || h < 1) throw Error("bad_state", "report has no map dimensions");
    const auto& t = report.meta.transform;

    const auto to_px = [&](const brm::Point& p) {
        return std::pair<double, double>{(p.x - t.origin_x) / t.resolution,
                                         (p.y - t.origin_y) / t.resolution};
    };

    std::vector<std::uint8_t> img(static_cast<std::size_t>(w) * h, 255);
    for (std::size_t i = 1; i < report.frames.size(); ++i) {
        const auto [ax, ay] = to_px(report.frames[i - 1].dead_reckoning);
        const auto [bx, by] = to_px(report.frames[i].dead_reckoning);
        draw_segment(img, w, h, ax, ay, bx, by, 192);
    }
    for (std::size_t i = 1; i < report.frames.size(); ++i) {
        const auto [ax, ay] = to_px(report.frames[i - 1].estimate);
        const auto [bx, by] = to_px(report.frames[i].estimate);
        draw_segment(img, w, h, ax, ay, bx, by, 96);
    }
    for (std::size_t i = 1; i < report.frames.size(); ++i) {
        const auto [ax, ay] = to_px(report.frames[i - 1].truth);
        const auto [bx, by] = to_px(report.frames[i].truth);
        draw_segment(img, w, h, ax, ay, bx, by, 0);
    }
    brm::write_png_gray(dir / "trajectory.png", img.data(), w, h);
    int written = 1;

    // regenerate candidate heat maps from any recorded CSV dumps
    for (std::size_t i = 0;; ++i) {
        const auto csv = dir / ("candidates_" + std::to_string(i) + ".csv");
        if (!fs::exists(csv)) break;
        std::vector<std::uint8_t> heat(static_cast<std::size_t>(w) * h, 255);
        std::ifstream in(csv);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no == 1 || line.empty()) continue;
            const auto f = split_csv_line(line);
            const double x = csv_num(f, 1, csv, line_no), y = csv_num(f, 2, csv, line_no);
            const int px = static_cast<int>(std::lround((x - t.origin_x) / t.resolution));
            const int py = static_cast<int>(std::lround((y - t.origin_y) / t.resolution));
            if (px >= 0 && px < w && py >= 0 && py < h)
                heat[static_cast<std::size_t>(py) * w + px] = 0;
        }
        brm::write_png_gray(dir / ("heatmap_" + std::to_string(i) + ".png"), heat.data(), w, h);
        ++written;
    }
    std::printf("wrote %d png files to %s\n", written, dir.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"building-ratio-map UAV localization toolkit"};
    app.require_subcommand(1);

    // synth-map
    auto* synth = app.add_subcommand("synth-map", "generate a synthetic city GeoJSON");
    std::string synth_out = "city.geojson";
    std::uint64_t synth_seed = 1;
    double synth_w = 2000, synth_h = 2000;
    synth->add_option("--out", synth_out, "output GeoJSON path");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--world-w", synth_w, "world width, meters");
    synth->add_option("--world-h", synth_h, "world height, meters");

    // rasterize
    auto* rast = app.add_subcommand("rasterize", "rasterize building polygons to a PGM grid");
    std::string rast_polygons, rast_out = "map.pgm";
    double rast_res = 0.5;
    std::optional<double> rast_ox, rast_oy;
    int rast_w = 0, rast_h = 0;
    rast->add_option("--polygons", rast_polygons, "GeoJSON input")->required();
    rast->add_option("--out", rast_out, "output PGM path (sidecar .geo is added)");
    rast->add_option("--resolution", rast_res, "meters per cell");
    rast->add_option("--origin-x", rast_ox, "world x of cell (0,0) center");
    rast->add_option("--origin-y", rast_oy, "world y of cell (0,0) center");
    rast->add_option("--width", rast_w, "grid width in cells (0 = fit polygons)");
    rast->add_option("--height", rast_h, "grid height in cells (0 = fit polygons)");

    // ratio-map
    auto* rmap = app.add_subcommand("ratio-map", "precompute the building ratio map");
    std::string rmap_raster, rmap_out = "map.brm";
    int rmap_n = 3, rmap_stride = 10;
    double rmap_alpha = 43, rmap_alt = 150;
    rmap->add_option("--raster", rmap_raster, "input PGM raster")->required();
    rmap->add_option("--out", rmap_out, "output ratio map path");
    rmap->add_option("--n", rmap_n, "number of concentric layers");
    rmap->add_option("--stride", rmap_stride, "lattice stride in cells");
    rmap->add_option("--alpha-deg", rmap_alpha, "camera field of view, degrees");
    rmap->add_option("--altitude", rmap_alt, "flight altitude, meters");

    // config-driven commands share --config/--set/--out
    std::string sim_config, sim_out, loc_config, loc_dataset, loc_out, eval_config, eval_out;
    std::vector<std::string> sim_set, loc_set, eval_set;

    auto* sim = app.add_subcommand("simulate", "render a simulated flight dataset");
    sim->add_option("--config", sim_config, "experiment config file");
    sim->add_option("--set", sim_set, "config override key=value (repeatable)");
    sim->add_option("--out", sim_out, "dataset directory (overrides out_dir)");

    auto* loc = app.add_subcommand("localize", "run the matcher over a simulated dataset");
    loc->add_option("--config", loc_config, "experiment config file");
    loc->add_option("--set", loc_set, "config override key=value (repeatable)");
    loc->add_option("--dataset", loc_dataset, "dataset directory from simulate")->required();
    loc->add_option("--out", loc_out, "report directory (overrides out_dir)");

    auto* eval = app.add_subcommand("evaluate", "run the full experiment end to end");
    eval->add_option("--config", eval_config, "experiment config file");
    eval->add_option("--set", eval_set, "config override key=value (repeatable)");
    eval->add_option("--out", eval_out, "report directory (overrides out_dir)");

    auto* plot = app.add_subcommand("plot", "render PNG overviews for a finished run");
    std::string plot_dir;
    plot->add_option("--dir", plot_dir, "directory holding report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << nlohmann::ordered_json{{"error", "cli"}, {"message", e.what()}}.dump()
                  << "\n";
        return e.get_exit_code();
    }

    try {
        if (synth->parsed()) return cmd_synth_map(synth_out, synth_seed, synth_w, synth_h);
        if (rast->parsed())
            return cmd_rasterize(rast_polygons, rast_out, rast_res, rast_ox, rast_oy, rast_w,
                                 rast_h);
        if (rmap->parsed())
            return cmd_ratio_map(rmap_raster, rmap_out, rmap_n, rmap_stride, rmap_alpha, rmap_alt);
        if (sim->parsed()) return cmd_simulate(sim_config, sim_set, sim_out);
        if (loc->parsed()) return cmd_localize(loc_config, loc_set, loc_dataset, loc_out);
        if (eval->parsed()) return cmd_evaluate(eval_config, eval_set, eval_out);
        if (plot->parsed()) return cmd_plot(plot_dir);
    } catch (const Error& e) {
        std::cerr << nlohmann::ordered_json{{"error", e.code()}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::ordered_json{{"error", "internal"}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    }
    return 0;
}
