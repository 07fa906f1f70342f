#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qpsim/cascade.hpp"
#include "qpsim/config.hpp"
#include "qpsim/errors.hpp"
#include "qpsim/materials.hpp"
#include "qpsim/parity.hpp"
#include "qpsim/qpdynamics.hpp"
#include "qpsim/transport.hpp"

namespace py = pybind11;
using namespace qpsim;

namespace {

struct Device {
    RunConfig cfg;
    MaterialDatabase db;
    Chip chip;
    DeviceMaterials mats;
    explicit Device(RunConfig c)
        : cfg(std::move(c)),
          db(cfg.material_database()),
          chip(cfg.geometry),
          mats(DeviceMaterials::build(db, cfg.geometry, cfg.materials.bilayer_top_nm, cfg.materials.bilayer_bottom_nm,
                                      cfg.materials.electrode_thickness_nm)) {}
};

RunConfig load_config(const std::string& text) { return text.empty() ? RunConfig{} : RunConfig::from_json_text(text); }

std::vector<std::vector<std::int64_t>> ledger_counts(const DepositLedger& l) {
    std::vector<std::vector<std::int64_t>> out(l.n_electrodes());
    for (std::size_t e = 0; e < l.n_electrodes(); ++e) {
        auto c = l.electrode_counts(e);
        out[e].assign(c.begin(), c.end());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Phonon and quasiparticle transport core";
    m.attr("__version__") = QPSIM_VERSION;

    // translators run newest first, so the base class goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<Infeasible>(m, "Infeasible", PyExc_ValueError);
    py::register_exception<FitFailure>(m, "FitFailure", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

    // materials
    m.def("weighted_sound_speed", &weighted_sound_speed, py::arg("v_T"), py::arg("v_L"), py::arg("dos_T"),
          py::arg("dos_L"));
    m.def("absorption_probability", &absorption_probability, py::arg("eta_T"), py::arg("eta_L"), py::arg("dos_T"),
          py::arg("dos_L"));
    m.def("gap_vs_thickness", &gap_vs_thickness, py::arg("d_nm"), py::arg("gap_bulk_ueV"), py::arg("coeff_ueV_nm"));
    m.def("bilayer_average_gap", &bilayer_average_gap);
    m.def("materials_report", [] { return MaterialDatabase::bundled().report_csv(); });
    m.def("ti_phonon_lifetime", [] { return ti_phonon_lifetime(MaterialDatabase::bundled().ti_inputs()); });
    m.def("cu_coupling", [] { return free_electron_coupling(MaterialDatabase::bundled().normal_metal("Cu")); });

    // cascade
    m.def(
        "injector_yield",
        [](double pair_energy_meV, double gap_meV, std::int64_t trials, std::uint64_t seed) {
            Rng rng = make_stream(seed, 0);
            return injector_yield(pair_energy_meV, gap_meV, rng, trials);
        },
        py::arg("pair_energy_meV") = 1.0, py::arg("gap_meV") = 0.18, py::arg("trials") = 100000,
        py::arg("seed") = 1);
    m.def("escape_probability", &escape_probability);

    // config and geometry
    m.def("config_schema", &config_schema);
    m.def(
        "normalize_config", [](const std::string& text) { return load_config(text).to_json(); }, py::arg("text") = "");
    m.def(
        "geometry_summary",
        [](const std::string& text) {
            const Device d(load_config(text));
            py::dict out;
            out["electrodes"] = d.chip.electrode_count();
            out["electrode_area_fraction"] = d.chip.electrode_area_fraction();
            out["island_coverage"] = d.cfg.geometry.islands_enabled ? d.chip.island_coverage() : 0.0;
            out["junction_gap_meV"] = d.mats.junction_gap();
            out["geometry_hash"] = hex64(d.chip.hash());
            return out;
        },
        py::arg("config") = "");

    // transport
    m.def(
        "run_injection",
        [](const std::string& text, std::uint64_t phonons, std::uint64_t seed, unsigned workers) {
            Device d(load_config(text));
            TransportConfig tc = d.cfg.transport.config;
            tc.workers = workers;
            const auto src = make_injection_source(d.cfg.geometry, d.mats, phonons, d.cfg.materials.injector_energy_meV);
            DepositLedger l;
            {
                py::gil_scoped_release release;
                l = run_injection(src, d.chip, d.mats, tc, seed);
            }
            py::dict out;
            out["counts"] = ledger_counts(l);
            out["bin_width_ns"] = l.bin_width();
            out["total_qp"] = l.total_qp();
            out["closure"] = l.energy.closure_error();
            out["csv"] = ledger_to_csv(l);
            return out;
        },
        py::arg("config"), py::arg("phonons"), py::arg("seed") = 1, py::arg("workers") = 0);
    m.def(
        "run_gamma",
        [](const std::string& text, std::uint64_t pairs, std::uint64_t seed, unsigned workers) {
            Device d(load_config(text));
            TransportConfig tc = d.cfg.transport.config;
            tc.workers = workers;
            const GammaImpact impact{d.cfg.gamma.position, d.cfg.gamma.deposit_keV};
            DepositLedger l;
            {
                py::gil_scoped_release release;
                l = run_gamma(impact, d.chip, d.mats, tc, seed, pairs);
            }
            py::dict out;
            out["counts"] = ledger_counts(l);
            out["bin_width_ns"] = l.bin_width();
            out["total_qp"] = l.total_qp();
            out["closure"] = l.energy.closure_error();
            out["n_eh"] = impact.n_eh(d.db.substrate().pair_energy);
            return out;
        },
        py::arg("config"), py::arg("pairs"), py::arg("seed") = 1, py::arg("workers") = 0);

    // QP dynamics
    py::class_<QpModelParams>(m, "QpModelParams")
        .def(py::init<>())
        .def_readwrite("r", &QpModelParams::r)
        .def_readwrite("s", &QpModelParams::s)
        .def_readwrite("volume", &QpModelParams::volume)
        .def_readwrite("n_cp", &QpModelParams::n_cp)
        .def_readwrite("area_scale", &QpModelParams::area_scale);
    m.def(
        "solve_xqp",
        [](const std::vector<double>& g, double g_dt, const QpModelParams& p, double dt, double x0, double t_end) {
            return solve_xqp(g, g_dt, p, dt, x0, t_end).x;
        },
        py::arg("g"), py::arg("g_dt"), py::arg("params"), py::arg("dt"), py::arg("x0") = 0.0, py::arg("t_end") = -1.0);
    m.def("xqp_from_delta_gamma1", &xqp_from_delta_gamma1, py::arg("delta_gamma_per_us"), py::arg("gap_ueV") = 180.0,
          py::arg("f01_GHz") = 5.0);
    m.def("delta_gamma1_from_xqp", &delta_gamma1_from_xqp, py::arg("x"), py::arg("gap_ueV") = 180.0,
          py::arg("f01_GHz") = 5.0);
    m.def("xqp_threshold_for_t1", &xqp_threshold_for_t1, py::arg("t1_us"), py::arg("gap_ueV") = 180.0,
          py::arg("f01_GHz") = 5.0);

    // parity
    py::class_<ParityTrace>(m, "ParityTrace")
        .def_readonly("samples", &ParityTrace::samples)
        .def_readonly("dt_rep", &ParityTrace::dt_rep)
        .def_readonly("hidden_flips", &ParityTrace::hidden_flips);
    m.def("simulate_trace", &simulate_trace, py::arg("gamma_p"), py::arg("fidelity"), py::arg("m") = 20000,
          py::arg("dt_rep") = 0.01, py::arg("seed") = 1);
    m.def(
        "fit_parity",
        [](const std::vector<ParityTrace>& traces) {
            const auto f = psd_and_fit(traces);
            py::dict out;
            out["gamma_p"] = f.gamma_p;
            out["fidelity"] = f.fidelity;
            out["covariance"] = f.covariance;
            return out;
        },
        py::arg("traces"));
    m.def("lorentzian_psd", &lorentzian_psd);
    m.def("coincidence_forward", [](double a, double b, double ab) {
        const auto o = coincidence_forward(a, b, ab);
        return py::make_tuple(o.p_a, o.p_b, o.p_ab);
    });
    m.def("coincidence_invert", [](double a, double b, double ab) {
        const auto u = coincidence_invert(a, b, ab);
        return py::make_tuple(u.p_a, u.p_b, u.p_ab);
    });
}
