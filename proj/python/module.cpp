#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "prethermal/analysis.hpp"
#include "prethermal/drive.hpp"
#include "prethermal/ensemble.hpp"
#include "prethermal/error.hpp"
#include "prethermal/harness.hpp"
#include "prethermal/hamiltonian.hpp"
#include "prethermal/propagator.hpp"

namespace py = pybind11;
using namespace prethermal;
using nlohmann::json;

namespace {

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_python(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

propagator::TimeTrace make_trace(const std::vector<double>& times, const std::vector<double>& values,
                                 const std::vector<double>& stderr_values) {
    propagator::TimeTrace t;
    t.times = times;
    t.values = values;
    t.stderr_values = stderr_values;
    t.validate();
    return t;
}

py::dict trace_dict(const propagator::TimeTrace& t) {
    py::dict d;
    d["times"] = py::array_t<double>(static_cast<py::ssize_t>(t.times.size()), t.times.data());
    d["values"] = py::array_t<double>(static_cast<py::ssize_t>(t.values.size()), t.values.data());
    d["stderr"] = py::array_t<double>(static_cast<py::ssize_t>(t.stderr_values.size()), t.stderr_values.data());
    if (!t.center_index.empty()) {
        d["center_index"] = t.center_index;
        d["centers"] = t.centers;
    }
    d["metadata"] = to_python(t.metadata);
    return d;
}

drive::DriveWaveform waveform(const std::string& kind, double omega, double amplitude, double ratio) {
    drive::DriveWaveform w;
    w.kind = drive::drive_kind_from_string(kind);
    w.omega = omega;
    w.amplitude = amplitude;
    w.ratio = ratio;
    w.validate();
    return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dipolar spin-ensemble dynamics under periodic and quasi-periodic drives";
    m.attr("__version__") = harness::kSoftwareVersion;
    m.attr("J0") = ensemble::kJ0;
    m.attr("GOLDEN_RATIO") = drive::kGoldenRatio;

    py::register_exception<Error>(m, "PrethermalError", PyExc_RuntimeError);

    m.def("ppm_to_density", &ensemble::ppm_to_density, py::arg("ppm"),
          py::arg("carbon_number_density") = ensemble::kCarbonNumberDensity);
    m.def("local_energy_scale", &ensemble::local_energy_scale, py::arg("density"));

    m.def(
        "sample_ensemble",
        [](std::size_t n, double density, const std::string& geometry, std::uint64_t seed) {
            const auto e = ensemble::sample_ensemble(n, density, ensemble::geometry_from_string(geometry), seed);
            py::array_t<double> pos({static_cast<py::ssize_t>(n), py::ssize_t{3}});
            auto r = pos.mutable_unchecked<2>();
            for (std::size_t i = 0; i < n; ++i)
                for (int k = 0; k < 3; ++k) r(static_cast<py::ssize_t>(i), k) = e.positions[i][k];
            return pos;
        },
        py::arg("n_spins"), py::arg("density"), py::arg("geometry") = "central_spin_sphere", py::arg("seed") = 0,
        "Positions in nm as an (n, 3) array.");

    m.def(
        "hamiltonian_matrix",
        [](const py::array_t<double>& positions, double rabi, const std::vector<double>& onsite) {
            auto p = positions.unchecked<2>();
            ensemble::SpinEnsemble e;
            for (py::ssize_t i = 0; i < p.shape(0); ++i) e.positions.emplace_back(p(i, 0), p(i, 1), p(i, 2));
            const auto h = hamiltonian::build_hamiltonian(
                hamiltonian::HamiltonianSpec(ensemble::CouplingTable::from_ensemble(e), rabi, onsite));
            return Eigen::MatrixXcd(h.dense());
        },
        py::arg("positions"), py::arg("rabi") = 0.0, py::arg("onsite") = std::vector<double>{},
        "Dense H0 + sum h_i Sz_i in the computational basis (bit 0 of the index is spin 0, 0 = up).");

    m.def(
        "waveform_value", [](const std::string& kind, double omega, double t, double ratio) {
            return drive::waveform_value(waveform(kind, omega, 1.0, ratio), t);
        },
        py::arg("kind"), py::arg("omega"), py::arg("t"), py::arg("ratio") = drive::kGoldenRatio);

    m.def(
        "fourier2d",
        [](const std::string& kind, double omega, int n_max, int grid_size, double ratio) {
            const auto f = drive::fourier2d(waveform(kind, omega, 1.0, ratio), n_max, grid_size);
            const py::ssize_t side = 2 * n_max + 1;
            py::array_t<std::complex<double>> out({side, side});
            auto r = out.mutable_unchecked<2>();
            for (int a = -n_max; a <= n_max; ++a)
                for (int b = -n_max; b <= n_max; ++b) r(a + n_max, b + n_max) = f(a, b);
            return out;
        },
        py::arg("kind"), py::arg("omega") = 1.0, py::arg("n_max") = drive::kDefaultNMax,
        py::arg("grid_size") = drive::kDefaultGridSize, py::arg("ratio") = drive::kGoldenRatio,
        "F[n1 + n_max, n2 + n_max] for the drive f(t).");

    m.def(
        "low_frequency_weight",
        [](const std::string& kind, double omega, double local_scale, int n_max, int grid_size) {
            const auto w = waveform(kind, omega, 1.0, drive::kGoldenRatio);
            return drive::low_frequency_weight(drive::project_spectrum(drive::fourier2d(w, n_max, grid_size), omega, w.ratio),
                                               local_scale);
        },
        py::arg("kind"), py::arg("omega"), py::arg("local_scale"), py::arg("n_max") = drive::kDefaultNMax,
        py::arg("grid_size") = drive::kDefaultGridSize);

    m.def(
        "run_campaign",
        [](const py::object& config, double omega) {
            const auto cfg = harness::ExperimentConfig::from_json(from_python(config));
            harness::CampaignResult r;
            {
                py::gil_scoped_release release;
                r = harness::run_campaign(cfg, omega);
            }
            py::dict d = trace_dict(r.trace);
            d["manifest"] = to_python(r.manifest());
            return d;
        },
        py::arg("config"), py::arg("omega") = 0.0,
        "Disorder-averaged trace for a config dict (frequencies in MHz) at base frequency omega (rad/us).");

    m.def(
        "fit_decay",
        [](const std::vector<double>& times, const std::vector<double>& values, const std::string& model, double T0,
           double window_start, const std::vector<double>& stderr_values) {
            return to_python(analysis::fit_decay(make_trace(times, values, stderr_values),
                                                 analysis::decay_model_from_string(model), T0, window_start)
                                 .to_json());
        },
        py::arg("times"), py::arg("values"), py::arg("model") = "single_exp_T0", py::arg("T0") = 1e9,
        py::arg("window_start") = 0.0, py::arg("stderr") = std::vector<double>{});

    m.def(
        "fit_scaling",
        [](const std::vector<double>& omega, const std::vector<double>& tau, const std::vector<double>& tau_stderr) {
            return to_python(analysis::fit_scaling(omega, tau, tau_stderr).to_json());
        },
        py::arg("omega"), py::arg("tau"), py::arg("tau_stderr") = std::vector<double>{});

    m.def(
        "micromotion_amplitude",
        [](const std::vector<double>& times, const std::vector<double>& values, double t_a, double t_b) {
            return analysis::micromotion_amplitude(make_trace(times, values, {}), t_a, t_b);
        },
        py::arg("times"), py::arg("values"), py::arg("t_a"), py::arg("t_b"));

    m.def(
        "add_shot_noise",
        [](const std::vector<double>& times, const std::vector<double>& values, std::int64_t photons, std::uint64_t seed) {
            return trace_dict(analysis::add_shot_noise(make_trace(times, values, {}), photons, seed));
        },
        py::arg("times"), py::arg("values"), py::arg("photons_per_point"), py::arg("seed") = 0);

    m.def(
        "fit_plateau_extrapolation",
        [](const std::map<double, double>& amplitudes) {
            return to_python(analysis::fit_plateau_extrapolation(amplitudes).to_json());
        },
        py::arg("amplitudes"));
}
