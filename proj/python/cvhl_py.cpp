#include <pybind11/pybind11.h>
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include "cvhl/analysis.hpp"
#include "cvhl/config.hpp"
#include "cvhl/errors.hpp"
#include "cvhl/gaussian.hpp"
#include "cvhl/opo.hpp"
#include "cvhl/pattern.hpp"
#include "cvhl/scan.hpp"
#include "cvhl/special.hpp"
#include "cvhl/states.hpp"
#include "cvhl/tomography.hpp"
#include "cvhl/trace_io.hpp"

namespace py = pybind11;
using namespace cvhl;

namespace {

py::dict diagnostics_dict(const ReconstructionDiagnostics& d) {
    py::dict out;
    out["trailing_diagonal"] = d.trailing_diagonal;
    out["min_diagonal"] = d.min_diagonal;
    out["negative_diagonal_flagged"] = d.negative_diagonal_flagged;
    out["low_sample_warning"] = d.low_sample_warning;
    if (d.has_second_moments) {
        py::dict sm;
        sm["a"] = d.second_moments.a;
        sm["nbar"] = d.second_moments.nbar;
        sm["a2"] = d.second_moments.a2;
        sm["sigma_vmin"] = d.second_moments.sigma_vmin;
        out["second_moments"] = sm;
    }
    if (d.has_purity_unbiased)
        out["purity_unbiased"] = d.purity_unbiased;
    if (d.has_bootstrap)
        out["bootstrap_errors"] = d.bootstrap_errors;
    return out;
}

} // namespace

PYBIND11_MODULE(_cvhl, m) {
    m.doc() = "homodyne-detection simulation and pattern-function tomography";

    py::register_exception<DataQualityError>(m, "DataQualityError");
    py::register_exception<NumericalError>(m, "NumericalError");

    py::enum_<StateKind>(m, "StateKind")
        .value("Vacuum", StateKind::Vacuum)
        .value("Coherent", StateKind::Coherent)
        .value("SqueezedVacuum", StateKind::SqueezedVacuum)
        .value("SqueezedCoherent", StateKind::SqueezedCoherent);
    py::enum_<SeedPhaseMode>(m, "SeedPhaseMode")
        .value("NoSeed", SeedPhaseMode::None)
        .value("PhaseSqueezed", SeedPhaseMode::PhaseSqueezed)
        .value("AmplitudeSqueezed", SeedPhaseMode::AmplitudeSqueezed);
    py::enum_<DetectorConfig>(m, "DetectorConfig")
        .value("SHD", DetectorConfig::SHD)
        .value("IHA", DetectorConfig::IHA);
    py::enum_<ScanKind>(m, "ScanKind")
        .value("Linear", ScanKind::Linear)
        .value("PowerLaw", ScanKind::PowerLaw);
    py::enum_<ScanDirection>(m, "ScanDirection")
        .value("Up", ScanDirection::Up)
        .value("Down", ScanDirection::Down);

    py::class_<GaussianState>(m, "GaussianState")
        .def(py::init<>())
        .def_readwrite("mean", &GaussianState::mean)
        .def_readwrite("cov", &GaussianState::cov);

    py::class_<OPOParams>(m, "OPOParams")
        .def(py::init<>())
        .def_readwrite("pump_ratio", &OPOParams::pump_ratio)
        .def_readwrite("sideband_ratio", &OPOParams::sideband_ratio)
        .def_readwrite("seed_amplitude", &OPOParams::seed_amplitude)
        .def_readwrite("seed_phase_mode", &OPOParams::seed_phase_mode)
        .def_readwrite("excess_noise", &OPOParams::excess_noise);

    py::class_<EfficiencyBudget>(m, "EfficiencyBudget")
        .def(py::init<>())
        .def_readwrite("config", &EfficiencyBudget::config)
        .def_readwrite("eta_dm", &EfficiencyBudget::eta_dm)
        .def_readwrite("eta_esc", &EfficiencyBudget::eta_esc)
        .def_readwrite("eta_d", &EfficiencyBudget::eta_d)
        .def_readwrite("eta_el", &EfficiencyBudget::eta_el)
        .def_readwrite("visibility", &EfficiencyBudget::visibility)
        .def_readwrite("eta_bs", &EfficiencyBudget::eta_bs)
        .def_readwrite("eta_f", &EfficiencyBudget::eta_f)
        .def_readwrite("eta_w", &EfficiencyBudget::eta_w);

    py::class_<PhaseScanModel>(m, "PhaseScanModel")
        .def(py::init<>())
        .def_readwrite("kind", &PhaseScanModel::kind)
        .def_readwrite("theta0", &PhaseScanModel::theta0)
        .def_readwrite("span", &PhaseScanModel::span)
        .def_readwrite("duration", &PhaseScanModel::duration)
        .def_readwrite("exponent", &PhaseScanModel::exponent)
        .def_readwrite("direction", &PhaseScanModel::direction);

    py::class_<HomodyneTrace>(m, "HomodyneTrace")
        .def(py::init<>())
        .def_readwrite("sample_rate", &HomodyneTrace::sample_rate)
        .def_readwrite("demod_frequency", &HomodyneTrace::demod_frequency)
        .def_readwrite("calibration_scale", &HomodyneTrace::calibration_scale)
        .def_readwrite("source_label", &HomodyneTrace::source_label)
        .def_readwrite("seed", &HomodyneTrace::seed)
        .def("__len__", [](const HomodyneTrace& t) { return t.samples.size(); })
        .def("times",
             [](const HomodyneTrace& t) {
                 Eigen::VectorXd v(t.samples.size());
                 for (size_t i = 0; i < t.samples.size(); ++i) v[i] = t.samples[i].t;
                 return v;
             })
        .def("thetas",
             [](const HomodyneTrace& t) {
                 Eigen::VectorXd v(t.samples.size());
                 for (size_t i = 0; i < t.samples.size(); ++i) v[i] = t.samples[i].theta;
                 return v;
             })
        .def("values", [](const HomodyneTrace& t) {
            Eigen::VectorXd v(t.samples.size());
            for (size_t i = 0; i < t.samples.size(); ++i) v[i] = t.samples[i].x;
            return v;
        });

    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def(py::init<>())
        .def_readwrite("cutoff", &DensityMatrix::cutoff)
        .def_readwrite("rho", &DensityMatrix::rho)
        .def_property_readonly(
            "diagnostics", [](const DensityMatrix& dm) { return diagnostics_dict(dm.diag); });

    py::class_<WignerGrid>(m, "WignerGrid")
        .def_readonly("extent", &WignerGrid::extent)
        .def_readonly("step", &WignerGrid::step)
        .def_readonly("n_points", &WignerGrid::n_points)
        .def_readonly("values", &WignerGrid::values);

    // gaussian layer
    m.def("build_state", &build_state, py::arg("kind"),
          py::arg("amplitude") = std::complex<double>(0.0, 0.0), py::arg("v_minus") = 1.0,
          py::arg("v_plus") = 1.0, py::arg("squeeze_axis") = 0.0);
    m.def("apply_loss", &apply_loss);
    m.def("quadrature_stats", [](const GaussianState& s, double theta) {
        const auto st = quadrature_stats(s, theta);
        return py::make_tuple(st.mean, st.variance);
    });
    m.def("gaussian_purity", &gaussian_purity);
    m.def("gaussian_ncd", &gaussian_ncd);

    // efficiency budget / OPO layer
    m.def("homodyne_efficiency", &homodyne_efficiency);
    m.def("total_efficiency", &total_efficiency);
    m.def("noise_spectrum", [](const OPOParams& p, double eta) {
        const auto ns = noise_spectrum(p, eta);
        return py::make_tuple(ns.v_minus, ns.v_plus);
    });
    m.def("effective_output_state", &effective_output_state);
    m.def("electronic_efficiency_from_clearance", &electronic_efficiency_from_clearance);

    // scan / synthesis layer
    m.def("phase_at", &phase_at);
    m.def("synthesize_trace", &synthesize_trace, py::arg("state"), py::arg("model"),
          py::arg("n_samples"), py::arg("seed"), py::arg("source_label") = "synthetic");
    m.def("calibrate_shot_noise", &calibrate_shot_noise);
    m.def("fit_binned_variance",
          [](const HomodyneTrace& t, int n_bins) {
              const auto f = fit_binned_variance(t, n_bins);
              py::dict d;
              d["a0"] = f.a0;
              d["b"] = f.b;
              d["c"] = f.c;
              d["v_min"] = f.v_min;
              d["v_max"] = f.v_max;
              d["sigma_vmin"] = f.sigma_vmin;
              d["sigma_vmax"] = f.sigma_vmax;
              d["mean_a"] = f.mean_a;
              d["n_bins"] = f.n_bins;
              d["bins_used"] = f.bins_used;
              return d;
          },
          py::arg("trace"), py::arg("n_bins") = 0);
    m.def("fit_phase_model",
          [](const HomodyneTrace& t, const PhaseScanModel& initial, bool fit_exponent) {
              const auto r = fit_phase_model(t, initial, fit_exponent);
              py::dict d;
              d["model"] = r.model;
              d["amplitude"] = r.amplitude;
              d["phase_offset"] = r.phase_offset;
              d["residual"] = r.residual;
              d["iterations"] = r.iterations;
              d["converged"] = r.converged;
              return d;
          },
          py::arg("trace"), py::arg("initial"), py::arg("fit_exponent") = true);
    m.def("write_trace", &write_trace);
    m.def("read_trace", &read_trace);

    // special functions / kernels
    m.def("dawson", py::vectorize(dawson));
    m.def("eigenfunction_psi", py::vectorize(eigenfunction_psi));
    m.def("irregular_phi", py::vectorize(irregular_phi));
    m.def("pattern_function", py::vectorize(pattern_function));

    // tomography layer
    m.def("estimate_density_matrix",
          [](const HomodyneTrace& t, int cutoff) { return estimate_density_matrix(t, cutoff); },
          py::arg("trace"), py::arg("cutoff"));
    m.def("bootstrap_errors",
          [](const HomodyneTrace& t, int cutoff, int resamples, std::uint64_t seed) {
              return bootstrap_errors(t, cutoff, resamples, seed);
          },
          py::arg("trace"), py::arg("cutoff"), py::arg("resamples"), py::arg("seed") = 1);
    m.def("integral_oracle_estimate",
          [](const GaussianState& s, int cutoff, int n_theta, double x_step) {
              return integral_oracle_estimate(s, cutoff, n_theta, x_step);
          },
          py::arg("state"), py::arg("cutoff"), py::arg("n_theta") = 256,
          py::arg("x_step") = 0.005);
    m.def("psd_project", &psd_project);
    m.def("write_density", &write_density);
    m.def("read_density", &read_density);

    // reference Fock-basis states
    m.def("coherent_density", &coherent_density);
    m.def("thermal_density", &thermal_density);
    m.def("fock_density", &fock_density);
    m.def("squeezed_thermal_density", &squeezed_thermal_density);

    // analysis layer
    m.def("density_moments",
          [](const DensityMatrix& dm, bool tail) {
              const auto mo = density_moments(dm, tail);
              py::dict d;
              d["a"] = mo.a;
              d["a2"] = mo.a2;
              d["nbar"] = mo.nbar;
              return d;
          },
          py::arg("dm"), py::arg("tail_extrapolation") = true);
    m.def("purity", &purity);
    m.def("wigner_function", &wigner_function, py::arg("dm"), py::arg("extent"),
          py::arg("n_points"));
    m.def("wigner_value", &wigner_value);
    m.def("nonclassical_depth", [](const DensityMatrix& dm) {
        const auto r = nonclassical_depth(dm);
        py::dict d;
        d["tau"] = r.tau;
        d["unreliable"] = r.unreliable;
        d["wigner_negative"] = r.wigner_negative;
        d["wigner_min"] = r.wigner_min;
        return d;
    });
    m.def("quadrature_variance_curve", &quadrature_variance_curve);
    m.def("variance_extremes", [](const DensityMatrix& dm) {
        const auto v = variance_extremes(dm);
        py::dict d;
        d["v_min"] = v.v_min;
        d["v_max"] = v.v_max;
        d["sigma_vmin"] = v.sigma_vmin;
        return d;
    });
    m.def("squeezing_db", &squeezing_db);

    // config layer
    m.def("load_config", [](const std::string& path) {
        const ExperimentConfig cfg = load_config(path);
        py::dict d;
        d["opo"] = cfg.opo;
        d["budget"] = cfg.budget;
        d["scan"] = cfg.scan;
        d["n_samples"] = cfg.n_samples;
        d["seed"] = cfg.seed;
        d["cutoff"] = cfg.cutoff;
        return d;
    });
}
