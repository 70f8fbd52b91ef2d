#include "brm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "brm/geo.hpp"

namespace brm {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
    if (polygons_path.empty() && raster_path.empty())
        throw Error("bad_config", "need a polygons or raster input");
    if (!plan && plan_path.empty()) throw Error("bad_config", "need a flight plan");
    if (n < 1) throw Error("bad_config", "n must be at least 1");
    if (stride < 1) throw Error("bad_config", "stride must be at least 1");
    if (frame_h < 1) throw Error("bad_config", "frame side must be positive");
    if (!(resolution > 0)) throw Error("bad_config", "resolution must be positive");
    if (raster_w < 0 || raster_h < 0) throw Error("bad_config", "raster size must be non-negative");
    if (flip_prob < 0 || flip_prob > 1) throw Error("bad_config", "flip_prob must be in [0, 1]");
    if (sigma_d < 0) throw Error("bad_config", "sigma_d must be non-negative");
    if (!(scale_bias > -1)) throw Error("bad_config", "scale_bias must exceed -1");
    camera.validate();
    matcher.validate();
    for (const std::string* p : {&polygons_path, &raster_path, &plan_path}) {
        if (!p->empty() && !fs::exists(*p))
            throw Error("io", "missing input file " + *p);
    }
    if (plan) plan->validate();
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_num(std::string_view key, std::string_view value) {
    try {
        std::size_t used = 0;
        const std::string v(value);
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw Error("bad_config", "key " + std::string(key) + " has non-numeric value '" +
                                      std::string(value) + "'");
    }
}

long long parse_int(std::string_view key, std::string_view value) {
    const double x = parse_num(key, value);
    const long long i = static_cast<long long>(x);
    if (static_cast<double>(i) != x)
        throw Error("bad_config", "key " + std::string(key) + " needs an integer");
    return i;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error("bad_config", "key " + std::string(key) + " needs true or false");
}

void set_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    if (key == "polygons") cfg.polygons_path = value;
    else if (key == "raster") cfg.raster_path = value;
    else if (key == "ratio_map") cfg.ratio_map_path = value;
    else if (key == "plan") cfg.plan_path = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "n") cfg.n = static_cast<int>(parse_int(key, value));
    else if (key == "stride") cfg.stride = static_cast<int>(parse_int(key, value));
    else if (key == "frame_h") {
        cfg.frame_h = static_cast<int>(parse_int(key, value));
        cfg.camera.frame_h = cfg.frame_h;
        cfg.camera.frame_w = std::max(cfg.camera.frame_w, cfg.frame_h);
    } else if (key == "alpha_deg") cfg.camera.fov_alpha_deg = parse_num(key, value);
    else if (key == "altitude") cfg.camera.altitude_zl = parse_num(key, value);
    else if (key == "resolution") cfg.resolution = parse_num(key, value);
    else if (key == "origin_x") { cfg.origin_x = parse_num(key, value); cfg.origin_set = true; }
    else if (key == "origin_y") { cfg.origin_y = parse_num(key, value); cfg.origin_set = true; }
    else if (key == "raster_w") cfg.raster_w = static_cast<int>(parse_int(key, value));
    else if (key == "raster_h") cfg.raster_h = static_cast<int>(parse_int(key, value));
    else if (key == "e1") cfg.matcher.e1 = parse_num(key, value);
    else if (key == "epsilon") cfg.matcher.epsilon = parse_num(key, value);
    else if (key == "d_max") cfg.matcher.d_max = parse_num(key, value);
    else if (key == "k_cap") cfg.matcher.k_cap = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "continue_after_convergence")
        cfg.matcher.continue_after_convergence = parse_bool(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "flip_prob") cfg.flip_prob = parse_num(key, value);
    else if (key == "scale_bias") cfg.scale_bias = parse_num(key, value);
    else if (key == "sigma_d") cfg.sigma_d = parse_num(key, value);
    else if (key == "record_candidates") cfg.record_candidates = parse_bool(key, value);
    else throw Error("bad_config", "unknown config key '" + std::string(key) + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error("bad_config",
                        "line " + std::to_string(line_no) + " is not a key = value pair");
        set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void apply_overrides(ExperimentConfig& cfg, std::span<const std::string> overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw Error("bad_config", "override '" + ov + "' is not key=value");
        set_key(cfg, trim(std::string_view(ov).substr(0, eq)),
                trim(std::string_view(ov).substr(eq + 1)));
    }
}

double rmse(std::span<const Point> estimates, std::span<const Point> truths) {
    if (estimates.size() != truths.size())
        throw Error("length_mismatch", "rmse needs equally many estimates and truths");
    if (estimates.empty()) throw Error("length_mismatch", "rmse needs at least one pair");
    double acc = 0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double dx = estimates[i].x - truths[i].x, dy = estimates[i].y - truths[i].y;
        acc += dx * dx + dy * dy;
    }
    return std::sqrt(acc / static_cast<double>(estimates.size()));
}

BuildingRaster load_or_build_raster(const ExperimentConfig& cfg) {
    if (!cfg.raster_path.empty() && fs::exists(cfg.raster_path))
        return load_raster(cfg.raster_path);
    if (cfg.polygons_path.empty())
        throw Error("io", "raster " + cfg.raster_path + " missing and no polygons given");

    std::ifstream in(cfg.polygons_path);
    if (!in) throw Error("io", "cannot open polygons " + cfg.polygons_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto polys = parse_polygons(buf.str());
    if (polys.empty()) throw Error("bad_config", "polygon input has no usable polygons");

    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_y;
    for (const auto& poly : polys)
        for (const auto& v : poly.exterior) {
            min_x = std::min(min_x, v.x);
            min_y = std::min(min_y, v.y);
            max_x = std::max(max_x, v.x);
            max_y = std::max(max_y, v.y);
        }

    GeoTransform t;
    t.resolution = cfg.resolution;
    t.origin_x = cfg.origin_set ? cfg.origin_x : min_x + cfg.resolution / 2;
    t.origin_y = cfg.origin_set ? cfg.origin_y : min_y + cfg.resolution / 2;
    const int w = cfg.raster_w > 0
                      ? cfg.raster_w
                      : static_cast<int>(std::ceil((max_x - (t.origin_x - cfg.resolution / 2)) /
                                                   cfg.resolution));
    const int h = cfg.raster_h > 0
                      ? cfg.raster_h
                      : static_cast<int>(std::ceil((max_y - (t.origin_y - cfg.resolution / 2)) /
                                                   cfg.resolution));

    auto raster = rasterize(polys, t, w, h);
    if (!cfg.raster_path.empty()) save_raster(cfg.raster_path, raster);
    return raster;
}

RatioMapSet load_or_build_ratio_map(const ExperimentConfig& cfg, const BuildingRaster& raster) {
    if (!cfg.ratio_map_path.empty() && fs::exists(cfg.ratio_map_path)) {
        auto map = load(cfg.ratio_map_path);
        if (map.n != cfg.n || map.stride != cfg.stride)
            throw Error("bad_config", "cached ratio map " + cfg.ratio_map_path +
                                          " disagrees with the configured n or stride");
        return map;
    }
    auto map = generate(raster, cfg.camera, cfg.n, cfg.stride);
    if (!cfg.ratio_map_path.empty()) save(map, cfg.ratio_map_path);
    return map;
}

ExperimentReport run_localization(const RatioMapSet& map, const ExperimentConfig& cfg,
                                  std::span<const FrameMask> frames,
                                  std::span<const OdometryDelta> deltas,
                                  std::span<const TruePose> truth) {
    if (frames.empty()) throw Error("bad_state", "no frames to localize");
    if (frames.size() != truth.size())
        throw Error("length_mismatch", "one true pose per frame required");
    if (deltas.size() + 1 != frames.size())
        throw Error("length_mismatch", "one odometry delta per frame transition required");

    // non-owning alias; the map outlives the matcher inside this call
    std::shared_ptr<const RatioMapSet> map_ref(std::shared_ptr<void>(), &map);
    Matcher matcher(map_ref, cfg.matcher);

    const auto dr = dead_reckon({truth[0].x, truth[0].y}, truth, deltas);

    ExperimentReport report;
    report.frames.reserve(frames.size());
    double flown = 0;
    double ux = 0, uy = 0;
    Point est{truth[0].x, truth[0].y};

    for (std::size_t i = 0; i < frames.size(); ++i) {
        StepResult result;
        try {
            const auto f = extract(frames[i], cfg.n);
            result = matcher.step(f, i == 0 ? OdometryDelta{0} : deltas[i - 1]);
        } catch (const Error& e) {
            throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.what());
        }

        if (i > 0) {
            const double dx = truth[i].x - truth[i - 1].x, dy = truth[i].y - truth[i - 1].y;
            const double d = std::hypot(dx, dy);
            if (d > 0) {
                ux = dx / d;
                uy = dy / d;
            }
            flown += d;
        }

        if (result.converged_now && result.estimate) {
            est = *result.estimate;
        } else if (i > 0) {
            // coast on odometry from the last estimate between convergences
            est = {est.x + deltas[i - 1].d * ux, est.y + deltas[i - 1].d * uy};
        }

        const Point tr{truth[i].x, truth[i].y};
        const double err = std::hypot(est.x - tr.x, est.y - tr.y);
        report.frames.push_back({static_cast<int>(i), truth[i].t, tr, est, dr[i],
                                 result.candidate_count, result.phase, err});
        if (result.event)
            report.events.push_back({static_cast<int>(i), *result.estimate,
                                     matcher.events().back().spread,
                                     std::hypot(result.estimate->x - tr.x, result.estimate->y - tr.y),
                                     flown});
        if (cfg.record_candidates)
            report.candidate_dumps.push_back(matcher.state().candidates);
    }

    std::vector<Point> est_pts, dr_pts, truth_pts;
    for (const auto& fr : report.frames) {
        est_pts.push_back(fr.estimate);
        dr_pts.push_back(fr.dead_reckoning);
        truth_pts.push_back(fr.truth);
    }
    report.rmse_whole_path = rmse(est_pts, truth_pts);
    report.rmse_dead_reckoning_whole_path = rmse(dr_pts, truth_pts);
    if (!report.events.empty()) {
        const std::size_t from = static_cast<std::size_t>(report.events.front().frame) + 1;
        if (from < report.frames.size()) {
            const std::size_t len = report.frames.size() - from;
            report.rmse_after_first_convergence =
                rmse(std::span(est_pts).subspan(from, len), std::span(truth_pts).subspan(from, len));
            report.rmse_dead_reckoning_after_first_convergence =
                rmse(std::span(dr_pts).subspan(from, len), std::span(truth_pts).subspan(from, len));
        }
    }

    report.meta.lattice_w = map.lattice_w;
    report.meta.lattice_h = map.lattice_h;
    report.meta.stride = map.stride;
    report.meta.transform = {map.transform.origin_x, map.transform.origin_y,
                             map.transform.resolution * map.stride};
    return report;
}

ExperimentReport run(const ExperimentConfig& cfg) {
    cfg.validate();
    const FlightPlan plan = cfg.plan ? *cfg.plan : load_flight_plan(cfg.plan_path);
    if (std::abs(plan.altitude - cfg.camera.altitude_zl) > 1e-9)
        throw Error("bad_config", "flight altitude disagrees with the camera altitude");

    const auto raster = load_or_build_raster(cfg);
    const auto map = load_or_build_ratio_map(cfg, raster);
    const auto truth = gen_trajectory(plan);

    std::vector<FrameMask> frames;
    frames.reserve(truth.size());
    const SegmentationNoiseModel seg_noise{cfg.flip_prob, cfg.seed};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        try {
            auto frame = render_frame(raster, truth[i], cfg.camera, cfg.frame_h,
                                      static_cast<int>(i));
            frames.push_back(cfg.flip_prob > 0 ? corrupt(frame, seg_noise) : std::move(frame));
        } catch (const Error& e) {
            throw Error(e.code(), "frame " + std::to_string(i) + ": " + e.what());
        }
    }

    const auto deltas = odometry(truth, {cfg.scale_bias, cfg.sigma_d, cfg.seed});
    auto report = run_localization(map, cfg, frames, deltas, truth);
    report.meta.background = lattice_background(raster, map);
    return report;
}

std::vector<std::uint8_t> lattice_background(const BuildingRaster& raster, const RatioMapSet& map) {
    std::vector<std::uint8_t> bg(static_cast<std::size_t>(map.lattice_w) * map.lattice_h, 255);
    for (int iy = 0; iy < map.lattice_h; ++iy)
        for (int ix = 0; ix < map.lattice_w; ++ix)
            if (raster.cells.get(ix * map.stride, iy * map.stride))
                bg[static_cast<std::size_t>(iy) * map.lattice_w + ix] = 96;
    return bg;
}

namespace {

ordered_json point_json(const Point& p) { return ordered_json::array({p.x, p.y}); }

Point point_from_json(const ordered_json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Phase phase_from_string(const std::string& s) {
    if (s == "searching") return Phase::Searching;
    if (s == "tracking") return Phase::Tracking;
    if (s == "converged") return Phase::Converged;
    throw Error("parse_error", "unknown phase '" + s + "'");
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
    ordered_json doc;
    doc["frames"] = ordered_json::array();
    for (const auto& fr : report.frames) {
        ordered_json j;
        j["i"] = fr.i;
        j["t"] = fr.t;
        j["truth"] = point_json(fr.truth);
        j["estimate"] = point_json(fr.estimate);
        j["dead_reckoning"] = point_json(fr.dead_reckoning);
        j["candidates"] = fr.candidates;
        j["phase"] = to_string(fr.phase);
        j["error"] = fr.error;
        doc["frames"].push_back(std::move(j));
    }
    doc["events"] = ordered_json::array();
    for (const auto& ev : report.events) {
        ordered_json j;
        j["frame"] = ev.frame;
        j["estimate"] = point_json(ev.estimate);
        j["spread"] = ev.spread;
        j["error"] = ev.error;
        j["distance_flown"] = ev.distance_flown;
        doc["events"].push_back(std::move(j));
    }
    doc["rmse"]["whole_path"] = report.rmse_whole_path;
    doc["rmse"]["after_first_convergence"] =
        report.rmse_after_first_convergence ? ordered_json(*report.rmse_after_first_convergence)
                                            : ordered_json(nullptr);
    doc["rmse"]["dead_reckoning_whole_path"] = report.rmse_dead_reckoning_whole_path;
    doc["rmse"]["dead_reckoning_after_first_convergence"] =
        report.rmse_dead_reckoning_after_first_convergence
            ? ordered_json(*report.rmse_dead_reckoning_after_first_convergence)
            : ordered_json(nullptr);
    doc["map"]["lattice_w"] = report.meta.lattice_w;
    doc["map"]["lattice_h"] = report.meta.lattice_h;
    doc["map"]["stride"] = report.meta.stride;
    doc["map"]["resolution"] = report.meta.transform.resolution;
    doc["map"]["origin_x"] = report.meta.transform.origin_x;
    doc["map"]["origin_y"] = report.meta.transform.origin_y;
    return doc.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("parse_error", std::string("malformed report JSON: ") + e.what());
    }
    try {
        ExperimentReport report;
        for (const auto& j : doc.at("frames")) {
            FrameRecord fr;
            fr.i = j.at("i").get<int>();
            fr.t = j.at("t").get<double>();
            fr.truth = point_from_json(j.at("truth"));
            fr.estimate = point_from_json(j.at("estimate"));
            fr.dead_reckoning = point_from_json(j.at("dead_reckoning"));
            fr.candidates = j.at("candidates").get<std::size_t>();
            fr.phase = phase_from_string(j.at("phase").get<std::string>());
            fr.error = j.at("error").get<double>();
            report.frames.push_back(fr);
        }
        for (const auto& j : doc.at("events")) {
            EventRecord ev;
            ev.frame = j.at("frame").get<int>();
            ev.estimate = point_from_json(j.at("estimate"));
            ev.spread = j.at("spread").get<double>();
            ev.error = j.at("error").get<double>();
            ev.distance_flown = j.at("distance_flown").get<double>();
            report.events.push_back(ev);
        }
        const auto& rm = doc.at("rmse");
        report.rmse_whole_path = rm.at("whole_path").get<double>();
        if (!rm.at("after_first_convergence").is_null())
            report.rmse_after_first_convergence = rm.at("after_first_convergence").get<double>();
        report.rmse_dead_reckoning_whole_path = rm.at("dead_reckoning_whole_path").get<double>();
        if (!rm.at("dead_reckoning_after_first_convergence").is_null())
            report.rmse_dead_reckoning_after_first_convergence =
                rm.at("dead_reckoning_after_first_convergence").get<double>();
        const auto& mp = doc.at("map");
        report.meta.lattice_w = mp.at("lattice_w").get<int>();
        report.meta.lattice_h = mp.at("lattice_h").get<int>();
        report.meta.stride = mp.at("stride").get<int>();
        report.meta.transform.resolution = mp.at("resolution").get<double>();
        report.meta.transform.origin_x = mp.at("origin_x").get<double>();
        report.meta.transform.origin_y = mp.at("origin_y").get<double>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error("parse_error", std::string("report JSON missing fields: ") + e.what());
    }
}

bool report_equal(const ExperimentReport& a, const ExperimentReport& b) {
    return report_to_json(a) == report_to_json(b);
}

void export_report(const ExperimentReport& report, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("io", "cannot create output directory " + dir.string());

    {
        std::ofstream out(dir / "trajectory.csv", std::ios::binary);
        if (!out) throw Error("io", "cannot write " + (dir / "trajectory.csv").string());
        out << "t,truth_x,truth_y,est_x,est_y,phase\n";
        char buf[192];
        for (const auto& fr : report.frames) {
            std::snprintf(buf, sizeof(buf), "%.3f,%.6f,%.6f,%.6f,%.6f,%s\n", fr.t, fr.truth.x,
                          fr.truth.y, fr.estimate.x, fr.estimate.y, to_string(fr.phase));
            out << buf;
        }
        if (!out) throw Error("io", "short write to trajectory.csv");
    }
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw Error("io", "cannot write " + (dir / "report.json").string());
        out << report_to_json(report);
        if (!out) throw Error("io", "short write to report.json");
    }

    const std::size_t lattice =
        static_cast<std::size_t>(report.meta.lattice_w) * report.meta.lattice_h;
    for (std::size_t i = 0; i < report.candidate_dumps.size(); ++i) {
        const auto& dump = report.candidate_dumps[i];
        {
            std::ofstream out(dir / ("candidates_" + std::to_string(i) + ".csv"),
                              std::ios::binary);
            if (!out) throw Error("io", "cannot write candidate dump " + std::to_string(i));
            dump_candidates_csv(out, static_cast<int>(i), dump);
        }
        if (lattice == 0) continue;
        std::vector<std::uint8_t> img;
        if (report.meta.background.size() == lattice) img = report.meta.background;
        else img.assign(lattice, 255);
        for (const auto& c : dump) {
            const std::size_t at =
                static_cast<std::size_t>(c.iy) * report.meta.lattice_w + c.ix;
            if (at < lattice) img[at] = 0;
        }
        write_png_gray(dir / ("heatmap_" + std::to_string(i) + ".png"), img.data(),
                       report.meta.lattice_w, report.meta.lattice_h);
    }
}

namespace {

void append_crc_chunk(std::string& out, const char type[4], const std::string& payload) {
    const auto put_u32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<char>(v >> 24));
        out.push_back(static_cast<char>(v >> 16));
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v));
    };
    put_u32(static_cast<std::uint32_t>(payload.size()));
    std::uint32_t crc = crc32(0, nullptr, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty())
        crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
                    static_cast<uInt>(payload.size()));
    out.append(type, 4);
    out += payload;
    put_u32(crc);
}

}  // namespace

void write_png_gray(const fs::path& path, const std::uint8_t* data, int w, int h) {
    if (w < 1 || h < 1) throw Error("bad_config", "png needs positive dimensions");

    std::string raw;
    raw.reserve(static_cast<std::size_t>(h) * (w + 1));
    for (int y = 0; y < h; ++y) {
        raw.push_back('\0');  // filter: none
        raw.append(reinterpret_cast<const char*>(data + static_cast<std::size_t>(y) * w), w);
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(zlen, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &zlen,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        throw Error("io", "png compression failed");
    compressed.resize(zlen);

    std::string ihdr;
    const auto put_u32 = [&ihdr](std::uint32_t v) {
        ihdr.push_back(static_cast<char>(v >> 24));
        ihdr.push_back(static_cast<char>(v >> 16));
        ihdr.push_back(static_cast<char>(v >> 8));
        ihdr.push_back(static_cast<char>(v));
    };
    put_u32(static_cast<std::uint32_t>(w));
    put_u32(static_cast<std::uint32_t>(h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(0);   // grayscale
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // adaptive filtering
    ihdr.push_back(0);   // no interlace

    std::string png("\x89PNG\r\n\x1a\n", 8);
    append_crc_chunk(png, "IHDR", ihdr);
    append_crc_chunk(png, "IDAT", compressed);
    append_crc_chunk(png, "IEND", "");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path.string());
    out.write(png.data(), static_cast<std::streamsize>(png.size()));
    if (!out) throw Error("io", "short write to " + path.string());
}

std::string synth_city_geojson(std::uint64_t seed, double world_w, double world_h) {
    if (!(world_w > 0) || !(world_h > 0))
        throw Error("bad_config", "world dimensions must be positive");
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // a few urban cores give the density field a global gradient, so
    // building ratios identify where you are instead of repeating a
    // district-periodic pattern that aliases under map matching
    struct Core {
        double x, y, sigma, peak;
    };
    std::vector<Core> cores;
    const int core_count = 3;
    for (int c = 0; c < core_count; ++c)
        cores.push_back({(0.15 + 0.7 * unit(rng)) * world_w, (0.15 + 0.7 * unit(rng)) * world_h,
                         250 + 350 * unit(rng), 0.25 + 0.25 * unit(rng)});
    const auto base_density = [&](double x, double y) {
        double d = 0.05;
        for (const auto& c : cores) {
            const double r2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
            d += c.peak * std::exp(-r2 / (2 * c.sigma * c.sigma));
        }
        return std::min(d, 0.55);
    };

    const double district = 125;
    const int dx_count = std::max(1, static_cast<int>(world_w / district));
    const int dy_count = std::max(1, static_cast<int>(world_h / district));

    ordered_json features = ordered_json::array();
    const auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };

    for (int dy = 0; dy < dy_count; ++dy) {
        for (int dx = 0; dx < dx_count; ++dx) {
            const double x0 = dx * (world_w / dx_count), y0 = dy * (world_h / dy_count);
            const double dw = world_w / dx_count, dh = world_h / dy_count;

            // field value at the district center, jittered per district;
            // a few districts stay parks
            double density = base_density(x0 + dw / 2, y0 + dh / 2) * (0.6 + 0.8 * unit(rng));
            if (unit(rng) < 0.08) density = 0.0;
            if (density == 0.0) continue;

            double covered = 0;
            const double target = density * dw * dh;
            int guard = 0;
            while (covered < target && ++guard < 400) {
                const double bw = 12 + 48 * unit(rng);
                const double bh = 12 + 48 * unit(rng);
                const double angle = unit(rng) < 0.3 ? unit(rng) * std::numbers::pi / 2 : 0.0;
                const double ca = std::cos(angle), sa = std::sin(angle);
                // rotated half-extents keep every corner inside the district
                const double ex = ca * bw / 2 + sa * bh / 2;
                const double ey = sa * bw / 2 + ca * bh / 2;
                const double cx = x0 + 4 + ex + unit(rng) * std::max(dw - 8 - 2 * ex, 0.0);
                const double cy = y0 + 4 + ey + unit(rng) * std::max(dh - 8 - 2 * ey, 0.0);

                const auto corner = [&](double ux, double uy) {
                    const double lx = ux * bw / 2, ly = uy * bh / 2;
                    return ordered_json::array(
                        {round2(cx + ca * lx - sa * ly), round2(cy + sa * lx + ca * ly)});
                };
                ordered_json exterior = ordered_json::array(
                    {corner(-1, -1), corner(1, -1), corner(1, 1), corner(-1, 1), corner(-1, -1)});
                ordered_json rings = ordered_json::array({exterior});

                if (bw > 34 && bh > 34 && unit(rng) < 0.25) {
                    const auto hole = [&](double ux, double uy) {
                        const double lx = ux * (bw / 2 - 9), ly = uy * (bh / 2 - 9);
                        return ordered_json::array(
                            {round2(cx + ca * lx - sa * ly), round2(cy + sa * lx + ca * ly)});
                    };
                    rings.push_back(ordered_json::array(
                        {hole(-1, -1), hole(1, -1), hole(1, 1), hole(-1, 1), hole(-1, -1)}));
                }

                ordered_json feature;
                feature["type"] = "Feature";
                feature["properties"] = ordered_json::object();
                feature["geometry"]["type"] = "Polygon";
                feature["geometry"]["coordinates"] = std::move(rings);
                features.push_back(std::move(feature));
                covered += bw * bh;
            }
        }
    }

    ordered_json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = std::move(features);
    return doc.dump() + "\n";
}

}  // namespace brm
