#include "pdm/delaunay.hpp"
#include "pdm/errors.hpp"
#include "pdm/montecarlo.hpp"
#include "pdm/morse.hpp"
#include "pdm/sampling.hpp"
#include "pdm/theory.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

namespace {

py::array_t<double> cloud_array(const pdm::PointCloud& cloud) {
    py::array_t<double> a({static_cast<py::ssize_t>(cloud.size()), static_cast<py::ssize_t>(cloud.dim)});
    std::copy(cloud.coords.begin(), cloud.coords.end(), a.mutable_data());
    return a;
}

pdm::PointCloud cloud_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& pts,
                                 double side, bool periodic) {
    if (pts.ndim() != 2) {
        throw pdm::ConfigError("points must be an (N, n) array");
    }
    const int n = static_cast<int>(pts.shape(1));
    pdm::PointCloud cloud;
    cloud.dim = n;
    cloud.region = pdm::Region::cube(n, side, periodic);
    cloud.coords.assign(pts.data(), pts.data() + pts.size());
    return cloud;
}

/// JSON serializations are handed to Python as strings and parsed there.
template <class T>
std::string dumps(const T& x) {
    return pdm::to_json(x).dump();
}

} // namespace

PYBIND11_MODULE(_pdmorse, m) {
    m.doc() = "Poisson-Delaunay mosaics: circumradius Morse intervals and their intensities";

    auto base = py::register_exception<pdm::Error>(m, "Error");
    py::register_exception<pdm::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<pdm::UnsupportedDimension>(m, "UnsupportedDimension", base.ptr());
    py::register_exception<pdm::Unsupported>(m, "Unsupported", base.ptr());
    py::register_exception<pdm::TorusTooSparse>(m, "TorusTooSparse", base.ptr());
    py::register_exception<pdm::MarginTooSmall>(m, "MarginTooSmall", base.ptr());
    py::register_exception<pdm::DegenerateInput>(m, "DegenerateInput", base.ptr());
    py::register_exception<pdm::DegenerateSimplex>(m, "DegenerateSimplex", base.ptr());
    py::register_exception<pdm::PartitionViolation>(m, "PartitionViolation", base.ptr());

    m.def("constant_C", &pdm::constant_C, py::arg("ell"), py::arg("k"), py::arg("n"));
    m.def("constant_D", &pdm::constant_D, py::arg("j"), py::arg("n"));
    m.def("constant_C_exact", [](int ell, int k, int n) { return pdm::constant_C_exact(ell, k, n).to_string(); },
          py::arg("ell"), py::arg("k"), py::arg("n"));
    m.def("constant_D_exact", [](int j, int n) { return pdm::constant_D_exact(j, n).to_string(); }, py::arg("j"),
          py::arg("n"));
    m.def("factor_f", &pdm::factor_f, py::arg("k"), py::arg("n"));
    m.def("spherical_expectation", &pdm::spherical_expectation_closed, py::arg("ell"), py::arg("k"), py::arg("n"));
    m.def("radius_cdf_interval", &pdm::radius_cdf_interval, py::arg("ell"), py::arg("k"), py::arg("n"),
          py::arg("density"), py::arg("r"));
    m.def("radius_cdf_simplex", &pdm::radius_cdf_simplex, py::arg("j"), py::arg("n"), py::arg("density"),
          py::arg("r"));
    m.def("triple_circle_moment", &pdm::triple_circle_moment, py::arg("half_domain") = false);
    m.def("_constants_json", [](int n) { return dumps(pdm::closed_form_constants(n)); }, py::arg("n"));

    m.def("set_thread_limit", &pdm::set_thread_limit, py::arg("threads"));
    m.def(
        "_sphere_estimate",
        [](int ell, int k, int n, std::uint64_t samples, std::uint64_t seed, const std::string& method) {
            py::gil_scoped_release release;
            const auto r =
                pdm::estimate_spherical_expectation(ell, k, n, samples, seed, pdm::sphere_method_from_string(method));
            return std::make_tuple(r.value, r.std_error, r.samples);
        },
        py::arg("ell"), py::arg("k"), py::arg("n"), py::arg("samples"), py::arg("seed"), py::arg("method"));
    m.def(
        "_wendel",
        [](int k, std::uint64_t samples, std::uint64_t seed) {
            py::gil_scoped_release release;
            const auto r = pdm::wendel_check(k, samples, seed);
            return std::make_tuple(r.value, r.std_error, r.samples);
        },
        py::arg("k"), py::arg("samples"), py::arg("seed"));
    m.def(
        "_bp_json",
        [](int k, int n, std::uint64_t samples, std::uint64_t seed) {
            pdm::BpResult r;
            {
                py::gil_scoped_release release;
                r = pdm::bp_identity_check(k, n, samples, seed);
            }
            return dumps(r);
        },
        py::arg("k"), py::arg("n"), py::arg("samples"), py::arg("seed"));
    m.def(
        "_mosaic_constants_json",
        [](int n, double density, double side, int trials, std::uint64_t seed) {
            std::string s;
            {
                py::gil_scoped_release release;
                s = dumps(pdm::estimate_constants_empirical(n, density, pdm::Region::cube(n, side, true), trials,
                                                            seed));
            }
            return s;
        },
        py::arg("n"), py::arg("density"), py::arg("side"), py::arg("trials"), py::arg("seed"));

    m.def(
        "sample_poisson",
        [](int n, double density, double side, bool periodic, std::uint64_t seed) {
            pdm::ProcessConfig config;
            config.density = density;
            config.seed = seed;
            config.region = pdm::Region::cube(n, side, periodic);
            return cloud_array(pdm::sample_poisson(config));
        },
        py::arg("n"), py::arg("density") = 1.0, py::arg("side") = 10.0, py::arg("periodic") = false,
        py::arg("seed") = 0, "Poisson sample in [0, side)^n as an (N, n) array.");
    m.def(
        "interval_census",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts, double side, bool periodic,
           double density) {
            const pdm::PointCloud cloud = cloud_from_array(pts, side, periodic);
            const pdm::Mosaic mosaic =
                pdm::triangulate(cloud, periodic ? pdm::Topology::torus : pdm::Topology::euclidean);
            const pdm::Decomposition dec = pdm::decompose(mosaic, cloud);
            const pdm::IntervalCensus cen = pdm::census(dec.intervals, cloud.region, density);
            const int n = cloud.dim;
            std::vector<std::vector<long>> counts(n + 1, std::vector<long>(n + 1, 0));
            for (int ell = 0; ell <= n; ++ell) {
                for (int k = 0; k <= n; ++k) {
                    counts[ell][k] = cen.counts[ell][k];
                }
            }
            std::vector<long> simplices;
            for (int j = 0; j <= n; ++j) {
                simplices.push_back(static_cast<long>(mosaic.count(j)));
            }
            py::dict d;
            d["interval_counts"] = counts;
            d["simplex_counts"] = simplices;
            d["euler_characteristic"] = mosaic.euler_characteristic();
            d["intervals"] = dec.intervals.size();
            return d;
        },
        py::arg("points"), py::arg("side"), py::arg("periodic") = true, py::arg("density") = 1.0,
        "Delaunay mosaic of the points in [0, side)^n and its interval counts c[ell][k].");
}
