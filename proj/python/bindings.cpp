#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "brm/geo.hpp"
#include "brm/harness.hpp"
#include "brm/matcher.hpp"
#include "brm/ratio_map.hpp"
#include "brm/sim.hpp"

namespace py = pybind11;
using namespace brm;

namespace {

FrameMask mask_from_array(const py::array_t<std::uint8_t>& arr, int index, double t) {
    if (arr.ndim() != 2) throw Error("bad_frame", "mask must be a 2-d array");
    const auto view = arr.unchecked<2>();
    const int h = static_cast<int>(view.shape(0)), w = static_cast<int>(view.shape(1));
    BitGrid bits(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (view(y, x)) bits.set(x, y, true);
    return {index, t, std::move(bits)};
}

py::array_t<std::uint8_t> grid_to_array(const BitGrid& grid) {
    py::array_t<std::uint8_t> arr({grid.height(), grid.width()});
    auto view = arr.mutable_unchecked<2>();
    for (int y = 0; y < grid.height(); ++y)
        for (int x = 0; x < grid.width(); ++x) view(y, x) = grid.get(x, y) ? 1 : 0;
    return arr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "building-ratio-map UAV localization core";

    py::register_exception<Error>(m, "BrmError");

    py::class_<GeoTransform>(m, "GeoTransform")
        .def(py::init<>())
        .def(py::init([](double ox, double oy, double res) {
                 return GeoTransform{ox, oy, res};
             }),
             py::arg("origin_x"), py::arg("origin_y"), py::arg("resolution"))
        .def_readwrite("origin_x", &GeoTransform::origin_x)
        .def_readwrite("origin_y", &GeoTransform::origin_y)
        .def_readwrite("resolution", &GeoTransform::resolution);

    py::class_<BuildingRaster>(m, "BuildingRaster")
        .def_readonly("width", &BuildingRaster::width)
        .def_readonly("height", &BuildingRaster::height)
        .def_readonly("transform", &BuildingRaster::transform)
        .def("building_fraction", &BuildingRaster::building_fraction)
        .def("to_numpy", [](const BuildingRaster& r) { return grid_to_array(r.cells); })
        .def("save", [](const BuildingRaster& r, const std::filesystem::path& p) {
            save_raster(p, r);
        })
        .def_static("load", [](const std::filesystem::path& p) { return load_raster(p); });

    m.def(
        "rasterize_geojson",
        [](const std::string& text, double resolution, std::optional<double> origin_x,
           std::optional<double> origin_y, int width, int height) {
            ExperimentConfig cfg;
            cfg.resolution = resolution;
            if (origin_x && origin_y) {
                cfg.origin_x = *origin_x;
                cfg.origin_y = *origin_y;
                cfg.origin_set = true;
            }
            cfg.raster_w = width;
            cfg.raster_h = height;
            const auto polys = parse_polygons(text);
            if (polys.empty()) throw Error("bad_config", "no usable polygons");
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
            t.resolution = resolution;
            t.origin_x = cfg.origin_set ? cfg.origin_x : min_x + resolution / 2;
            t.origin_y = cfg.origin_set ? cfg.origin_y : min_y + resolution / 2;
            const int w = width > 0 ? width
                                    : static_cast<int>(std::ceil(
                                          (max_x - (t.origin_x - resolution / 2)) / resolution));
            const int h = height > 0 ? height
                                     : static_cast<int>(std::ceil(
                                           (max_y - (t.origin_y - resolution / 2)) / resolution));
            return rasterize(polys, t, w, h);
        },
        py::arg("text"), py::arg("resolution") = 0.5, py::arg("origin_x") = std::nullopt,
        py::arg("origin_y") = std::nullopt, py::arg("width") = 0, py::arg("height") = 0);

    py::class_<RatioMapSet>(m, "RatioMap")
        .def_readonly("n", &RatioMapSet::n)
        .def_readonly("lattice_w", &RatioMapSet::lattice_w)
        .def_readonly("lattice_h", &RatioMapSet::lattice_h)
        .def_readonly("stride", &RatioMapSet::stride)
        .def_readonly("transform", &RatioMapSet::transform)
        .def("ground_radii",
             [](const RatioMapSet& m_) {
                 std::vector<double> out;
                 for (const auto& l : m_.layers) out.push_back(l.ground_radius_m);
                 return out;
             })
        .def("layer",
             [](const RatioMapSet& m_, int k) {
                 if (k < 1 || k > m_.n) throw Error("bad_config", "layer out of range");
                 const auto& vals = m_.layers[static_cast<std::size_t>(k) - 1].values;
                 py::array_t<float> arr({m_.lattice_h, m_.lattice_w});
                 auto view = arr.mutable_unchecked<2>();
                 for (int iy = 0; iy < m_.lattice_h; ++iy)
                     for (int ix = 0; ix < m_.lattice_w; ++ix)
                         view(iy, ix) = vals[static_cast<std::size_t>(iy) * m_.lattice_w + ix];
                 return arr;
             },
             py::arg("k"))
        .def("valid", [](const RatioMapSet& m_, int ix, int iy) { return m_.valid(ix, iy); })
        .def("world_of",
             [](const RatioMapSet& m_, int ix, int iy) {
                 const auto p = m_.world_of(ix, iy);
                 return py::make_tuple(p.x, p.y);
             })
        .def("residual",
             [](const RatioMapSet& m_, int ix, int iy, const std::vector<double>& f) {
                 return m_.residual(ix, iy, f);
             })
        .def("save", [](const RatioMapSet& m_, const std::filesystem::path& p) { brm::save(m_, p); })
        .def_static("load", [](const std::filesystem::path& p) { return brm::load(p); });

    m.def(
        "generate_ratio_map",
        [](const BuildingRaster& raster, int n, int stride, double alpha_deg, double altitude) {
            CameraConfig camera;
            camera.fov_alpha_deg = alpha_deg;
            camera.altitude_zl = altitude;
            return generate(raster, camera, n, stride);
        },
        py::arg("raster"), py::arg("n") = 3, py::arg("stride") = 10, py::arg("alpha_deg") = 43.0,
        py::arg("altitude") = 150.0);

    m.def(
        "extract_feature",
        [](const py::array_t<std::uint8_t>& mask, int n) {
            return extract(mask_from_array(mask, 0, 0), n);
        },
        py::arg("mask"), py::arg("n") = 3);

    py::enum_<Phase>(m, "Phase")
        .value("SEARCHING", Phase::Searching)
        .value("TRACKING", Phase::Tracking)
        .value("CONVERGED", Phase::Converged);

    py::class_<Matcher>(m, "Matcher")
        .def(py::init([](const RatioMapSet& map, double e1, double epsilon, double d_max,
                         std::size_t k_cap, bool continue_after_convergence) {
                 MatcherConfig cfg;
                 cfg.e1 = e1;
                 cfg.epsilon = epsilon;
                 cfg.d_max = d_max;
                 cfg.k_cap = k_cap;
                 cfg.continue_after_convergence = continue_after_convergence;
                 return Matcher(std::make_shared<RatioMapSet>(map), cfg);
             }),
             py::arg("map"), py::arg("e1") = 0.3, py::arg("epsilon") = 25.0,
             py::arg("d_max") = 75.0, py::arg("k_cap") = 50000,
             py::arg("continue_after_convergence") = true)
        .def(
            "step",
            [](Matcher& m_, const std::vector<double>& f, double d) {
                const auto r = m_.step(f, {d});
                py::dict out;
                out["phase"] = r.phase;
                out["converged_now"] = r.converged_now;
                out["event"] = r.event;
                out["candidates"] = r.candidate_count;
                if (r.estimate) out["estimate"] = py::make_tuple(r.estimate->x, r.estimate->y);
                else out["estimate"] = py::none();
                return out;
            },
            py::arg("feature"), py::arg("d") = 0.0)
        .def("clear_candidates", &Matcher::clear_candidates)
        .def("candidates", [](const Matcher& m_) {
            py::array_t<double> arr(
                {static_cast<py::ssize_t>(m_.state().candidates.size()), py::ssize_t(2)});
            auto view = arr.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < view.shape(0); ++i) {
                view(i, 0) = m_.state().candidates[static_cast<std::size_t>(i)].x;
                view(i, 1) = m_.state().candidates[static_cast<std::size_t>(i)].y;
            }
            return arr;
        });

    m.def("synth_city_geojson", &synth_city_geojson, py::arg("seed") = 1,
          py::arg("world_w") = 2000.0, py::arg("world_h") = 2000.0);

    m.def(
        "run_experiment",
        [](const std::string& config_text, const std::vector<std::string>& overrides) {
            auto cfg = parse_config(config_text);
            apply_overrides(cfg, overrides);
            const auto report = run(cfg);
            if (!cfg.out_dir.empty()) export_report(report, cfg.out_dir);
            return report_to_json(report);
        },
        py::arg("config_text"), py::arg("overrides") = std::vector<std::string>{});
}
