#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psafe/border.hpp"
#include "psafe/config.hpp"
#include "psafe/io.hpp"
#include "psafe/optimizer.hpp"
#include "psafe/oracle.hpp"

namespace py = pybind11;
using namespace psafe;

namespace {

const char* status_name(GdStatus s) {
    switch (s) {
        case GdStatus::Converged: return "converged";
        case GdStatus::StallSuspected: return "stall_suspected";
        case GdStatus::MaxIters: return "max_iters";
        case GdStatus::LeftRegion: return "left_region";
    }
    return "unknown";
}

py::dict estimate_dict(const Estimate& e) {
    py::dict d;
    d["p_hat"] = e.p_hat;
    d["se_p"] = e.se_p;
    d["grad"] = e.grad;
    d["se_grad"] = e.se_grad;
    d["N"] = e.N;
    d["n"] = e.n;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "grid-free boundary tracing of p-safe regions of an SDE";

    m.def("bm1d_survival", &oracle::bm1d_survival, py::arg("x"), py::arg("T"),
          py::arg("terms") = 999);
    m.def("bm1d_survival_dx", &oracle::bm1d_survival_dx, py::arg("x"), py::arg("T"),
          py::arg("terms") = 999);
    m.def("bm1d_root", &oracle::bm1d_root, py::arg("p"), py::arg("T"), py::arg("lo"),
          py::arg("hi"), py::arg("terms") = 999);

    py::class_<Region, std::shared_ptr<Region>>(m, "Region")
        .def("dim", &Region::dim)
        .def("contains", &Region::contains)
        .def("interior_distance", &Region::interior_distance)
        .def("centroid", &Region::centroid);
    py::class_<SphereRegion, Region, std::shared_ptr<SphereRegion>>(m, "SphereRegion")
        .def(py::init<Vec, double>(), py::arg("center"), py::arg("radius"));
    py::class_<BoxRegion, Region, std::shared_ptr<BoxRegion>>(m, "BoxRegion")
        .def(py::init<Vec, Vec>(), py::arg("lo"), py::arg("hi"));

    py::class_<SdeModel, std::shared_ptr<SdeModel>>(m, "SdeModel")
        .def("dim", &SdeModel::dim);
    m.def("toy3d", &builtin_toy3d, py::arg("rho"));
    m.def("bm", &builtin_bm, py::arg("d"), py::arg("scale") = 1.0);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init([](double T, int n) { return SimConfig{T, n}; }), py::arg("T"),
             py::arg("n"))
        .def_readwrite("T", &SimConfig::T)
        .def_readwrite("n", &SimConfig::n);

    py::class_<EstimateConfig>(m, "EstimateConfig")
        .def(py::init([](long N, uint64_t seed, bool antithetic, int threads) {
                 return EstimateConfig{N, seed, antithetic, threads};
             }),
             py::arg("N") = 10000, py::arg("seed") = 0, py::arg("antithetic") = true,
             py::arg("threads") = 0)
        .def_readwrite("N", &EstimateConfig::N)
        .def_readwrite("seed", &EstimateConfig::seed)
        .def_readwrite("antithetic", &EstimateConfig::antithetic)
        .def_readwrite("threads", &EstimateConfig::threads);

    m.def(
        "estimate",
        [](const std::shared_ptr<SdeModel>& model, const std::shared_ptr<Region>& region,
           const Vec& x, const SimConfig& sim, const EstimateConfig& cfg) {
            return estimate_dict(estimate(*model, *region, x, sim, cfg));
        },
        py::arg("model"), py::arg("region"), py::arg("x"), py::arg("sim"), py::arg("cfg"));

    m.def(
        "probe_start",
        [](const std::shared_ptr<SdeModel>& model, const std::shared_ptr<Region>& region,
           double p, double T, const SimConfig& sim, const EstimateConfig& cfg,
           const Vec& direction, double p_lo, double p_hi) {
            ProblemSpec spec{model.get(), region.get(), p, T};
            return probe_start(spec, sim, cfg, direction, p_lo, p_hi);
        },
        py::arg("model"), py::arg("region"), py::arg("p"), py::arg("T"), py::arg("sim"),
        py::arg("cfg"), py::arg("direction"), py::arg("p_lo") = 0.75, py::arg("p_hi") = 0.85);

    m.def(
        "find_boundary",
        [](const std::shared_ptr<SdeModel>& model, const std::shared_ptr<Region>& region,
           double p, double T, const Vec& x0, const SimConfig& sim,
           const EstimateConfig& est_cfg, double lambda, int max_iters, double err_tol) {
            ProblemSpec spec{model.get(), region.get(), p, T};
            GdConfig gd;
            gd.lambda = lambda;
            gd.max_iters = max_iters;
            gd.err_tol = err_tol;
            const GdResult r = find_boundary_point(spec, x0, sim, est_cfg, gd);
            py::dict d;
            d["x_star"] = r.x_star;
            d["status"] = status_name(r.status);
            d["iterations"] = r.iterations;
            d["estimate"] = estimate_dict(r.estimate_at_x_star);
            return d;
        },
        py::arg("model"), py::arg("region"), py::arg("p"), py::arg("T"), py::arg("x0"),
        py::arg("sim"), py::arg("cfg"), py::arg("lambda_") = 5e-2, py::arg("max_iters") = 50,
        py::arg("err_tol") = 0.02);

    m.def(
        "run_walk",
        [](const std::string& config_json) {
            const RunConfig cfg = parse_run_config(config_json);
            auto model = cfg.make_model();
            auto region = cfg.make_region();
            const int d = model->dim();
            ProblemSpec spec{model.get(), region.get(), cfg.p, cfg.T};
            const Vec x0 = cfg.start ? *cfg.start : region->centroid();
            const GdResult seed_res =
                find_boundary_point(spec, x0, cfg.sim(), cfg.estimate_cfg(), cfg.optimizer);
            if (seed_res.status != GdStatus::Converged)
                throw std::runtime_error(std::string("seed descent did not converge: ") +
                                         status_name(seed_res.status));
            BorderPoint seed;
            seed.x = seed_res.x_star;
            seed.p_hat = seed_res.estimate_at_x_star.p_hat;
            seed.grad = seed_res.estimate_at_x_star.grad;
            seed.se_p = seed_res.estimate_at_x_star.se_p;
            seed.se_grad = seed_res.estimate_at_x_star.se_grad;
            std::optional<PlaneConstraint> plane;
            if (d == 3) {
                Vec n = Vec::Zero(3);
                n[2] = 1.0;
                plane = PlaneConstraint(seed.x, n, 0);
            }
            const BorderPolyline poly = walk_border_2d(spec, seed, cfg.sim(),
                                                       cfg.estimate_cfg(), cfg.walk,
                                                       cfg.optimizer, plane, 0);
            Mat pts(poly.points.size(), d);
            for (size_t i = 0; i < poly.points.size(); ++i)
                pts.row(static_cast<long>(i)) = poly.points[i].x.transpose();
            py::dict out;
            out["points"] = pts;
            out["closed"] = poly.closed;
            out["note"] = poly.note;
            out["csv"] = polyline_to_csv(poly, d);
            return out;
        },
        py::arg("config_json"));

    m.def(
        "check_inside",
        [](const std::string& polyline_csv, const Vec& x, double angle_tol_deg) {
            const BorderPolyline poly = polyline_from_csv(polyline_csv);
            return inside_check(poly, x, angle_tol_deg) == InsideResult::Inside ? "Inside"
                                                                               : "Unknown";
        },
        py::arg("polyline_csv"), py::arg("x"), py::arg("angle_tol_deg") = 60.0);
}
