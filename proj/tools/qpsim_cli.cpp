#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpsim/config.hpp"
#include "qpsim/errors.hpp"
#include "qpsim/ledger.hpp"
#include "qpsim/materials.hpp"
#include "qpsim/parity.hpp"
#include "qpsim/qpdynamics.hpp"
#include "qpsim/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qpsim;

namespace {

struct Common {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out = "out";
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RunConfig load_config(const Common& c) {
    RunConfig cfg = RunConfig::load(c.config);
    if (c.seed) cfg.transport.seed = *c.seed;
    if (c.workers) cfg.transport.config.workers = *c.workers;
    return cfg;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

json audit_json(const DepositLedger& l) {
    const auto& e = l.energy;
    return {{"source_meV", EnergyAudit::to_meV(e.source)},
            {"electrodes_meV", EnergyAudit::to_meV(e.electrodes)},
            {"groundplane_meV", EnergyAudit::to_meV(e.groundplane)},
            {"islands_meV", EnergyAudit::to_meV(e.islands)},
            {"wall_escape_meV", EnergyAudit::to_meV(e.wall_escape)},
            {"dropped_meV", EnergyAudit::to_meV(e.dropped)},
            {"in_flight_meV", EnergyAudit::to_meV(e.in_flight)},
            {"charge_collected_meV", EnergyAudit::to_meV(e.charge_collected)},
            {"closure_error", e.closure_error()}};
}

json ledger_meta(const DepositLedger& l) {
    return {{"source_kind", source_kind_name(l.source_kind)},
            {"source_size", l.source_size},
            {"n_electrodes", l.n_electrodes()},
            {"n_bins", l.n_bins()},
            {"bin_width_ns", l.bin_width()},
            {"geometry_hash", hex64(l.geometry_hash())},
            {"escape_count", l.escape_count},
            {"qp_late_count", l.qp_late},
            {"total_qp_count", l.total_qp()}};
}

std::string traces_csv(const std::vector<XqpTrace>& traces, const ChipGeometry& g, std::size_t stride,
                       double time_shift) {
    std::ostringstream os;
    os << "t_us";
    for (const auto& e : g.electrodes) os << ",xqp_" << e.label << "_frac";
    os << '\n' << std::setprecision(9);
    const std::size_t n = traces.empty() ? 0 : traces.front().x.size();
    for (std::size_t i = 0; i < n; i += stride) {
        os << traces.front().time(i) - time_shift;
        for (const auto& t : traces) os << ',' << t.x[i];
        os << '\n';
    }
    return os.str();
}

void write_run(const std::string& subcommand, const RunConfig& cfg, const std::string& out, Clock::time_point t0,
               const json& totals, std::vector<std::pair<std::string, std::string>> files) {
    RunManifest m;
    m.subcommand = subcommand;
    m.config_hash = cfg.hash();
    m.seed = cfg.transport.seed;
    m.version = QPSIM_VERSION;
    m.totals_json = totals.dump();
    for (auto& [name, text] : files) {
        write_text_file(path_in(out, name), text);
        m.outputs.push_back(name);
    }
    write_text_file(path_in(out, "config.json"), cfg.to_json() + "\n");
    m.outputs.push_back("config.json");
    m.wall_clock_s = seconds_since(t0);
    write_manifest(out, m);
}

int cmd_materials(const std::optional<std::string>& db_path, const std::optional<std::string>& out) {
    const MaterialDatabase db = db_path ? MaterialDatabase::from_file(*db_path) : MaterialDatabase::bundled();
    const std::string csv = db.report_csv();
    if (out)
        write_text_file(*out, csv);
    else
        std::cout << csv;
    return 0;
}

int cmd_inject(const Common& c, std::optional<std::uint64_t> phonons) {
    const auto t0 = Clock::now();
    RunConfig cfg = load_config(c);
    if (phonons) cfg.transport.particles = *phonons;
    cfg.validate();
    const MaterialDatabase db = cfg.material_database();
    const Chip chip(cfg.geometry);
    const auto mats = DeviceMaterials::build(db, cfg.geometry, cfg.materials.bilayer_top_nm,
                                             cfg.materials.bilayer_bottom_nm, cfg.materials.electrode_thickness_nm);
    cfg.pulse.validate(db.superconductor("Al").gap);
    const auto src = make_injection_source(cfg.geometry, mats, cfg.transport.particles, cfg.materials.injector_energy_meV);
    const auto ledger = run_injection(src, chip, mats, cfg.transport.config, cfg.transport.seed);
    const auto s = cfg.trapping_rates();
    const auto traces = injection_traces(ledger, cfg.qp.params, cfg.pulse, cfg.qp.dt_us, -1.0, s);
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / cfg.qp.dt_us)));

    json peaks = json::object();
    for (std::size_t e = 0; e < traces.size(); ++e) {
        const auto& t = traces[e];
        peaks[cfg.geometry.electrodes[e].label] = {{"peak_xqp_frac", t.peak()},
                                                    {"peak_after_pulse_us", t.time(t.peak_index()) - cfg.pulse.duration}};
    }
    json totals = {{"ledger", ledger_meta(ledger)},
                   {"energy", audit_json(ledger)},
                   {"phonon_energy_meV", src.phonon_energy},
                   {"escape_fraction", static_cast<double>(ledger.escape_count) / static_cast<double>(src.count)},
                   {"peaks", peaks}};
    write_run("inject", cfg, c.out, t0, totals,
              {{"ledger.csv", ledger_to_csv(ledger)},
               {"xqp.csv", traces_csv(traces, cfg.geometry, stride, cfg.pulse.duration)}});
    std::cout << "inject: " << ledger.total_qp() << " QPs from " << src.count << " phonons, outputs in " << c.out
              << '\n';
    return 0;
}

int cmd_gamma(const Common& c, std::optional<std::uint64_t> pairs) {
    const auto t0 = Clock::now();
    RunConfig cfg = load_config(c);
    if (pairs) cfg.transport.particles = *pairs;
    if (cfg.transport.particles == 0) throw ValidationError({"--pairs: must be positive"});
    cfg.validate();
    const MaterialDatabase db = cfg.material_database();
    const Chip chip(cfg.geometry);
    const auto mats = DeviceMaterials::build(db, cfg.geometry, cfg.materials.bilayer_top_nm,
                                             cfg.materials.bilayer_bottom_nm, cfg.materials.electrode_thickness_nm);
    const GammaImpact impact{cfg.gamma.position, cfg.gamma.deposit_keV};
    const auto ledger = run_gamma(impact, chip, mats, cfg.transport.config, cfg.transport.seed, cfg.transport.particles);
    json totals = {{"ledger", ledger_meta(ledger)},
                   {"energy", audit_json(ledger)},
                   {"n_eh_gamma", impact.n_eh(mats.substrate.pair_energy)}};
    write_run("gamma", cfg, c.out, t0, totals, {{"ledger.csv", ledger_to_csv(ledger)}});
    std::cout << "gamma: " << ledger.total_qp() << " QPs from " << cfg.transport.particles << " pairs, outputs in "
              << c.out << '\n';
    return 0;
}

DepositLedger load_ledger(const std::string& dir, const Chip& chip) {
    const json m = json::parse(read_text_file(path_in(dir, "manifest.json")));
    const json& meta = m.at("totals").at("ledger");
    const std::string h = meta.at("geometry_hash").get<std::string>();
    if (h != hex64(chip.hash()))
        throw ValidationError({"ledger geometry hash " + h + " does not match the configured geometry " +
                               hex64(chip.hash())});
    DepositLedger l = ledger_from_csv(read_text_file(path_in(dir, "ledger.csv")), meta.at("n_electrodes"),
                                      meta.at("n_bins"), meta.at("bin_width_ns"), chip.hash());
    l.source_size = meta.at("source_size");
    const std::string kind = meta.at("source_kind");
    l.source_kind = kind == "gamma" ? SourceKind::Gamma : kind == "injection" ? SourceKind::Injection : SourceKind::None;
    return l;
}

std::vector<XqpTrace> traces_for(const DepositLedger& l, const RunConfig& cfg, const MaterialDatabase& db) {
    const auto s = cfg.trapping_rates();
    if (l.source_kind == SourceKind::Gamma) {
        const GammaImpact impact{cfg.gamma.position, cfg.gamma.deposit_keV};
        return gamma_traces(l, impact.n_eh(db.substrate().pair_energy), cfg.qp.params, cfg.qp.dt_us, -1.0, s);
    }
    return injection_traces(l, cfg.qp.params, cfg.pulse, cfg.qp.dt_us, -1.0, s);
}

int cmd_footprint(const Common& c, const std::string& ledger_dir, double grid_step_us) {
    const auto t0 = Clock::now();
    const RunConfig cfg = load_config(c);
    const MaterialDatabase db = cfg.material_database();
    const Chip chip(cfg.geometry);
    const DepositLedger l = load_ledger(ledger_dir, chip);
    const auto traces = traces_for(l, cfg, db);
    const auto fp = footprint(traces, chip, cfg.qp.t1_threshold_us, cfg.qp.f01_GHz, cfg.qp.gap_ueV);

    std::ostringstream grid;
    grid << "electrode_id,x_um,y_um,t_us,xqp_frac\n" << std::setprecision(9);
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(grid_step_us / cfg.qp.dt_us)));
    for (std::size_t e = 0; e < traces.size(); ++e) {
        const auto& el = cfg.geometry.electrodes[e];
        for (std::size_t i = 0; i < traces[e].x.size(); i += stride)
            if (traces[e].x[i] > 0)
                grid << e << ',' << el.x << ',' << el.y << ',' << traces[e].time(i) << ',' << traces[e].x[i] << '\n';
    }
    std::ostringstream ext;
    ext << "t_us,extent_um\n" << std::setprecision(9);
    for (std::size_t i = 0; i < fp.extent.size(); i += stride)
        ext << fp.dt * static_cast<double>(i) << ',' << fp.extent[i] << '\n';

    double peak = 0;
    std::string peak_label;
    for (std::size_t e = 0; e < traces.size(); ++e)
        if (traces[e].peak() > peak) {
            peak = traces[e].peak();
            peak_label = cfg.geometry.electrodes[e].label;
        }
    json totals = {{"max_extent_um", fp.max_extent()},
                   {"recovery_time_us", fp.recovery_time()},
                   {"xqp_threshold_frac", xqp_threshold_for_t1(cfg.qp.t1_threshold_us, cfg.qp.gap_ueV, cfg.qp.f01_GHz)},
                   {"peak_xqp_frac", peak},
                   {"peak_electrode", peak_label},
                   {"ledger_dir", ledger_dir}};
    write_run("footprint", cfg, c.out, t0, totals, {{"xqp_grid.csv", grid.str()}, {"extent.csv", ext.str()}});
    std::cout << "footprint: max extent " << fp.max_extent() << " um, recovery " << fp.recovery_time() << " us\n";
    return 0;
}

int cmd_fit_s(const Common& c, const std::string& ledger_dir, const std::string& trace_csv, const std::string& label,
              double s_min, double s_max) {
    const auto t0 = Clock::now();
    const RunConfig cfg = load_config(c);
    const MaterialDatabase db = cfg.material_database();
    const Chip chip(cfg.geometry);
    const DepositLedger l = load_ledger(ledger_dir, chip);
    int idx = -1;
    for (std::size_t e = 0; e < cfg.geometry.electrodes.size(); ++e)
        if (cfg.geometry.electrodes[e].label == label) idx = static_cast<int>(e);
    if (idx < 0) throw ValidationError({"--electrode: no electrode labelled '" + label + "'"});

    std::vector<double> t, x;
    std::istringstream in(read_text_file(trace_csv));
    std::string line;
    std::getline(in, line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw InvalidInput(trace_csv + ":" + std::to_string(lineno) + ": expected time_us,xqp");
        t.push_back(std::stod(line.substr(0, comma)));
        x.push_back(std::stod(line.substr(comma + 1)));
    }
    SeriesGrid g;
    if (l.source_kind == SourceKind::Gamma) {
        const GammaImpact impact{cfg.gamma.position, cfg.gamma.deposit_keV};
        g = gamma_generation(l, impact.n_eh(db.substrate().pair_energy), cfg.qp.params);
    } else {
        g = injection_generation(response_function(l, cfg.qp.params), cfg.pulse);
    }
    const auto fit = fit_trapping_rate(g.values[idx], g.dt, cfg.qp.params, t, x, cfg.qp.dt_us, s_min, s_max);
    json totals = {{"electrode", label}, {"s_per_us", fit.s}, {"rms_residual_frac", fit.residual}};
    write_run("fit-s", cfg, c.out, t0, totals, {{"fit.json", totals.dump(2) + "\n"}});
    std::cout << "fit-s: s = " << fit.s << " /us, rms residual " << fit.residual << '\n';
    return 0;
}

int cmd_parity(const std::string& out, double gamma_p, double fidelity, int n_traces, std::uint64_t seed,
               std::size_t samples, double dt_rep) {
    const auto t0 = Clock::now();
    if (n_traces <= 0) throw ValidationError({"--traces: must be positive"});
    std::vector<ParityTrace> traces;
    for (int i = 0; i < n_traces; ++i)
        traces.push_back(simulate_trace(gamma_p, fidelity, samples, dt_rep, seed + static_cast<std::uint64_t>(i)));
    const Psd psd = parity_psd(traces);
    const LorentzianFit fit = fit_lorentzian(psd);
    std::ostringstream os;
    os << "f_Hz,S_s\n" << std::setprecision(10);
    for (std::size_t k = 0; k < psd.f.size(); ++k) os << psd.f[k] << ',' << psd.s[k] << '\n';
    json report = {{"gamma_p_per_s", fit.gamma_p},
                   {"fidelity", fit.fidelity},
                   {"covariance", fit.covariance},
                   {"residual_norm", fit.residual_norm},
                   {"traces", n_traces},
                   {"samples", samples},
                   {"dt_rep_s", dt_rep},
                   {"true_gamma_p_per_s", gamma_p},
                   {"true_fidelity", fidelity}};
    RunManifest m;
    m.subcommand = "parity";
    m.seed = seed;
    m.version = QPSIM_VERSION;
    m.totals_json = report.dump();
    write_text_file(path_in(out, "psd.csv"), os.str());
    write_text_file(path_in(out, "fit.json"), report.dump(2) + "\n");
    m.outputs = {"psd.csv", "fit.json"};
    m.wall_clock_s = seconds_since(t0);
    write_manifest(out, m);
    std::cout << "parity: Gamma_p = " << fit.gamma_p << " /s, F = " << fit.fidelity << '\n';
    return 0;
}

int cmd_caustics(const Common& c, std::optional<std::uint64_t> phonons) {
    const auto t0 = Clock::now();
    RunConfig cfg = load_config(c);
    if (phonons) cfg.transport.particles = *phonons;
    cfg.validate();
    const MaterialDatabase db = cfg.material_database();
    const Chip chip(cfg.geometry);
    CausticConfig cc;
    cc.phonons = cfg.transport.particles;
    cc.bins = cfg.caustics.bins;
    cc.half_width = cfg.caustics.half_width_um;
    cc.workers = cfg.transport.config.workers;
    const CausticMap map = run_caustics(chip, db.substrate(), cc, cfg.transport.seed);
    std::ostringstream os;
    os << "ix,iy,x_um,y_um,hits_count\n" << std::setprecision(9);
    const double w = 2 * map.half_width / map.bins;
    for (int iy = 0; iy < map.bins; ++iy)
        for (int ix = 0; ix < map.bins; ++ix)
            os << ix << ',' << iy << ',' << -map.half_width + (ix + 0.5) * w << ',' << -map.half_width + (iy + 0.5) * w
               << ',' << map.count(ix, iy) << '\n';
    json totals = {{"phonons", cc.phonons}, {"outside", map.outside}};
    write_run("caustics", cfg, c.out, t0, totals, {{"caustic_map.csv", os.str()}});
    std::cout << "caustics: " << cc.phonons - map.outside << " hits inside the window\n";
    return 0;
}

int cmd_geometry_check(const Common& c) {
    const RunConfig cfg = load_config(c);
    const Chip chip(cfg.geometry);
    const MaterialDatabase db = cfg.material_database();
    const auto mats = DeviceMaterials::build(db, cfg.geometry, cfg.materials.bilayer_top_nm,
                                             cfg.materials.bilayer_bottom_nm, cfg.materials.electrode_thickness_nm);
    json r = {{"geometry_hash", hex64(chip.hash())},
              {"config_hash", hex64(cfg.hash())},
              {"electrodes", chip.electrode_count()},
              {"electrode_area_frac", chip.electrode_area_fraction()},
              {"island_coverage_frac", chip.island_coverage()},
              {"junction_gap_ueV", mats.junction_gap() * 1e3},
              {"threshold_meV", mats.threshold()},
              {"centre_row_electrodes", chip.centre_row().size()}};
    std::cout << r.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phonon transport and quasiparticle poisoning simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(QPSIM_VERSION));

    auto add_common = [](CLI::App* s, Common& c) {
        s->add_option("--config", c.config, std::string("Run configuration JSON (default: $") + kConfigEnvVar + ")");
        s->add_option("--seed", c.seed, "Master seed");
        s->add_option("--workers", c.workers, "Worker threads (0 = all cores)");
        s->add_option("--out", c.out, "Output directory");
    };

    Common common;
    std::optional<std::string> db_path, report_out;
    auto* materials = app.add_subcommand("materials", "Material database utilities");
    auto* report = materials->add_subcommand("report", "Print the material table as CSV");
    report->add_option("--db", db_path, "Material database JSON (default: bundled)");
    report->add_option("--out", report_out, "Write CSV to this file");
    materials->require_subcommand(1);

    std::optional<std::uint64_t> phonons, pairs;
    auto* inject = app.add_subcommand("inject", "Phonon injection run");
    add_common(inject, common);
    inject->add_option("--phonons", phonons, "Simulated phonons");

    auto* gamma = app.add_subcommand("gamma", "Gamma impact run");
    add_common(gamma, common);
    gamma->add_option("--pairs", pairs, "Simulated electron-hole pairs");

    std::string ledger_dir;
    double grid_step = 1.0;
    auto* fpc = app.add_subcommand("footprint", "x_qp maps and footprint extent from a ledger");
    add_common(fpc, common);
    fpc->add_option("--ledger", ledger_dir, "Directory written by inject or gamma")->required();
    fpc->add_option("--grid-step-us", grid_step, "Time step of the x_qp grid output");

    std::string trace_csv, electrode;
    double s_min = 1e-3, s_max = 1.0;
    auto* fit = app.add_subcommand("fit-s", "Fit the trapping rate to a measured trace");
    add_common(fit, common);
    fit->add_option("--ledger", ledger_dir, "Directory written by inject or gamma")->required();
    fit->add_option("--trace", trace_csv, "CSV with columns time_us,xqp")->required();
    fit->add_option("--electrode", electrode, "Electrode label")->required();
    fit->add_option("--s-min", s_min, "Lower bound of s, 1/us");
    fit->add_option("--s-max", s_max, "Upper bound of s, 1/us");

    double gamma_p = 0.6, fidelity = 0.8, dt_rep = 0.01;
    int n_traces = 50;
    std::size_t samples = 20000;
    std::uint64_t parity_seed = 1;
    std::string parity_out = "out";
    auto* parity = app.add_subcommand("parity", "Synthetic parity traces, PSD and Lorentzian fit");
    parity->add_option("--gamma-p", gamma_p, "Switching rate, 1/s");
    parity->add_option("--fidelity", fidelity, "Mapping fidelity");
    parity->add_option("--traces", n_traces, "Number of traces");
    parity->add_option("--samples", samples, "Samples per trace");
    parity->add_option("--dt-rep", dt_rep, "Repetition period, s");
    parity->add_option("--seed", parity_seed, "Seed");
    parity->add_option("--out", parity_out, "Output directory");

    auto* caustics = app.add_subcommand("caustics", "Anisotropic point-source absorption map");
    add_common(caustics, common);
    caustics->add_option("--phonons", phonons, "Simulated phonons");

    auto* geo = app.add_subcommand("geometry-check", "Validate a configuration and print geometry facts");
    add_common(geo, common);

    auto* schema = app.add_subcommand("schema", "Print the configuration JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*report) return cmd_materials(db_path, report_out);
        if (*inject) return cmd_inject(common, phonons);
        if (*gamma) return cmd_gamma(common, pairs);
        if (*fpc) return cmd_footprint(common, ledger_dir, grid_step);
        if (*fit) return cmd_fit_s(common, ledger_dir, trace_csv, electrode, s_min, s_max);
        if (*parity) return cmd_parity(parity_out, gamma_p, fidelity, n_traces, parity_seed, samples, dt_rep);
        if (*caustics) return cmd_caustics(common, phonons);
        if (*geo) return cmd_geometry_check(common);
        if (*schema) {
            std::cout << config_schema() << '\n';
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const FitFailure& e) {
        std::cerr << "fit failed: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
