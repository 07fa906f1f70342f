#include "qpsim/materials.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json_reader.hpp"
#include "qpsim/errors.hpp"
#include "qpsim/units.hpp"

namespace qpsim {

extern const char* const kBundledMaterialsJson;

namespace {

void check_weights(double a, double b) {
    if (!(a >= 0 && b >= 0) || std::abs(a + b - 1.0) > 1e-9)
        throw InvalidInput("DOS weights must be non-negative and sum to 1");
}

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string(what) + " must lie in [0, 1]");
}

void check_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(what + " must be positive");
}

constexpr double kAvogadro = 6.02214076e23;

}  // namespace

void SubstrateParams::validate() const {
    check_weights(dos_weight_T, dos_weight_L);
    check_probability(fast_transverse_share, "fast_transverse_share");
    check_probability(tt_decay_fraction, "tt_decay_fraction");
    for (double v : {mass_density, v_transverse, v_longitudinal, c11, c44, isotope_rate_B,
                     anharmonic_rate_A, bandgap, pair_energy, debye_frequency, charge_trap_length})
        check_positive(v, "substrate " + name + " parameter");
    if (pair_energy <= bandgap) throw InvalidInput("pair energy must exceed the band gap");
}

void SuperconductorParams::validate() const {
    check_probability(eta_T, "eta_T");
    check_probability(eta_L, "eta_L");
    check_probability(p_abs, "p_abs");
    for (double v : {mass_density, v_T, v_L, v_s, gap, phonon_lifetime})
        check_positive(v, "superconductor " + name + " parameter");
    for (const auto& o : {qp_lifetime, cooper_pair_density, normal_diffusion})
        if (o) check_positive(*o, "superconductor " + name + " parameter");
}

void NormalMetalParams::validate() const {
    check_probability(eta_T, "eta_T");
    check_probability(eta_L, "eta_L");
    check_probability(p_abs, "p_abs");
    for (double v : {mass_density, v_T, v_L, v_s, coupling_beta_L, fermi_velocity, fermi_energy, dos_fermi})
        check_positive(v, "normal metal " + name + " parameter");
}

double TiLifetimeInputs::gap() const {
    return 1.76 * units::kBoltzmann_eVK * critical_temperature * 1e6;
}

double LifetimeRecord::dos_per_atom() const {
    // gamma per (state/eV/atom), converted to mJ/(mol K^2)
    const double kB = units::kBoltzmann_eVK;
    const double per_state = units::kPi * units::kPi / 3.0 * kB * kB * kAvogadro * units::kJoulePerEv * 1e3;
    return sommerfeld_gamma / (per_state * (1.0 + lambda_mass)) / 2.0;
}

TiLifetimeInputs LifetimeRecord::inputs(double alpha2_meV) const {
    TiLifetimeInputs in;
    in.alpha2_av = alpha2_meV;
    in.atomic_density = atomic_density;
    in.dos_fermi = dos_per_atom() * atomic_density;
    in.critical_temperature = critical_temperature;
    return in;
}

double weighted_sound_speed(double v_T, double v_L, double dos_T, double dos_L) {
    check_weights(dos_T, dos_L);
    return dos_T * v_T + dos_L * v_L;
}

double absorption_probability(double eta_T, double eta_L, double dos_T, double dos_L) {
    check_probability(eta_T, "eta_T");
    check_probability(eta_L, "eta_L");
    check_weights(dos_T, dos_L);
    return std::min(1.0, dos_T * eta_T + dos_L * eta_L);
}

double gap_vs_thickness(double d_nm, double gap_bulk_ueV, double coeff_ueV_nm) {
    if (!(d_nm > 0)) throw InvalidInput("film thickness must be positive");
    return gap_bulk_ueV + coeff_ueV_nm / d_nm;
}

double bilayer_average_gap(double d1_nm, double d2_nm, double gap_bulk_ueV, double coeff_ueV_nm) {
    return 0.5 * (gap_vs_thickness(d1_nm, gap_bulk_ueV, coeff_ueV_nm) +
                  gap_vs_thickness(d2_nm, gap_bulk_ueV, coeff_ueV_nm));
}

double pair_breaking_rate(double e_ph_ueV, const SuperconductorParams& sc) {
    if (e_ph_ueV < 2.0 * sc.gap) throw DomainError("phonon energy below 2*gap cannot break pairs");
    return (1.0 + 0.29 * (e_ph_ueV / sc.gap - 2.0)) / sc.phonon_lifetime;
}

double pair_breaking_mean_free_path(double e_ph_ueV, const SuperconductorParams& sc) {
    return sc.v_s / pair_breaking_rate(e_ph_ueV, sc);
}

double normal_phonon_rate(double omega, const NormalMetalParams& nm) {
    if (!(omega > 0)) throw DomainError("angular frequency must be positive");
    return units::kPi * nm.coupling_beta_L * (nm.v_L / nm.fermi_velocity) * omega;
}

double normal_phonon_rate_for_energy(double e_ph_meV, const NormalMetalParams& nm) {
    return normal_phonon_rate(units::meV_to_rad_per_ns(e_ph_meV), nm);
}

double normal_mean_free_path(double e_ph_meV, const NormalMetalParams& nm) {
    return nm.v_s / normal_phonon_rate_for_energy(e_ph_meV, nm);
}

double free_electron_coupling(const NormalMetalParams& nm) {
    const double eF = nm.fermi_energy * units::kJoulePerEv;
    const double rho = nm.mass_density * 1e3;  // kg/m^3
    const double vL = nm.v_L * 1e3;            // m/s
    const double a = 2.0 * eF / 3.0;
    return a * a * nm.dos_fermi / (2.0 * rho * vL * vL);
}

double ti_phonon_lifetime(const TiLifetimeInputs& in) {
    check_positive(in.alpha2_av, "alpha2_av");
    check_positive(in.dos_fermi, "dos_fermi");
    check_positive(in.atomic_density, "atomic_density");
    check_positive(in.critical_temperature, "critical_temperature");
    const double n0_per_atom = in.dos_fermi / in.atomic_density;  // 1/eV
    const double alpha2 = in.alpha2_av * 1e-3;                      // eV
    const double gap = in.gap() * 1e-6;                             // eV
    const double tau_s = units::kHbar_eVs / (4.0 * units::kPi * units::kPi * n0_per_atom * alpha2 * gap);
    return tau_s * 1e9;
}

double alpha2_from_lambda(double lambda_mass, std::span<const DosBin> dos) {
    if (!(lambda_mass > 0)) throw InvalidInput("lambda must be positive");
    if (dos.empty()) throw InvalidInput("phonon DOS table is empty");
    double integral = 0, inverse_moment = 0;
    for (const auto& b : dos) {
        if (!(b.omega > 0) || !(b.width > 0) || b.value < 0)
            throw InvalidInput("phonon DOS bins need positive energy and width and non-negative weight");
        integral += b.value * b.width;
        inverse_moment += b.value * b.width / b.omega;
    }
    if (!(integral > 0)) throw InvalidInput("phonon DOS table has no weight");
    const double alpha2 = lambda_mass / (2.0 * inverse_moment);
    return alpha2 * integral / 3.0;
}

double qp_diffusion_length(double e, const SuperconductorParams& sc) {
    if (!(e > 1.0)) throw DomainError("QP energy must exceed the gap");
    if (!sc.normal_diffusion || !sc.qp_lifetime)
        throw InvalidInput("material " + sc.name + " lacks diffusion constant or QP lifetime");
    const double d = *sc.normal_diffusion * std::sqrt(1.0 - 1.0 / (e * e));
    const double x = e - 1.0;
    const double rate = 1.8 / *sc.qp_lifetime * x * x * x;
    return std::sqrt(d / rate);
}

DosWeights debye_dos_weights(double v_T, double v_L) {
    check_positive(v_T, "v_T");
    check_positive(v_L, "v_L");
    const double t = 2.0 / (v_T * v_T * v_T);
    const double l = 1.0 / (v_L * v_L * v_L);
    return {t / (t + l), l / (t + l)};
}

std::vector<DosBin> debye_dos_table(double cutoff_meV, int bins) {
    if (!(cutoff_meV > 0) || bins <= 0) throw InvalidInput("Debye table needs a positive cutoff and bin count");
    std::vector<DosBin> out;
    const double w = cutoff_meV / bins;
    for (int i = 0; i < bins; ++i) {
        // exact bin integral of Omega^2 divided by the width
        const double a = i * w, b = (i + 1) * w;
        out.push_back({0.5 * (a + b), w, (b * b * b - a * a * a) / (3.0 * w)});
    }
    return out;
}

namespace {

using detail::JsonReader;

SuperconductorParams read_sc(JsonReader r) {
    SuperconductorParams s;
    r.require("name", s.name);
    r.require("mass_density", s.mass_density);
    r.require("v_T", s.v_T);
    r.require("v_L", s.v_L);
    r.require("v_s", s.v_s);
    r.require("eta_T", s.eta_T);
    r.require("eta_L", s.eta_L);
    r.require("p_abs", s.p_abs);
    r.require("gap", s.gap);
    s.gap_bulk = s.gap;
    r.read("gap_bulk", s.gap_bulk);
    r.read("gap_thickness_coeff", s.gap_thickness_coeff);
    r.require("phonon_lifetime", s.phonon_lifetime);
    r.read("qp_lifetime", s.qp_lifetime);
    r.read("cooper_pair_density", s.cooper_pair_density);
    r.read("normal_diffusion", s.normal_diffusion);
    r.finish();
    return s;
}

NormalMetalParams read_nm(JsonReader r) {
    NormalMetalParams n;
    r.require("name", n.name);
    r.require("mass_density", n.mass_density);
    r.require("v_T", n.v_T);
    r.require("v_L", n.v_L);
    r.require("v_s", n.v_s);
    r.require("eta_T", n.eta_T);
    r.require("eta_L", n.eta_L);
    r.require("p_abs", n.p_abs);
    r.require("coupling_beta_L", n.coupling_beta_L);
    r.require("fermi_velocity", n.fermi_velocity);
    r.require("fermi_energy", n.fermi_energy);
    r.require("dos_fermi", n.dos_fermi);
    r.finish();
    return n;
}

SubstrateParams read_substrate(JsonReader r) {
    SubstrateParams s;
    r.read("name", s.name);
    r.read("mass_density", s.mass_density);
    r.read("v_transverse", s.v_transverse);
    r.read("v_longitudinal", s.v_longitudinal);
    r.read("dos_weight_T", s.dos_weight_T);
    r.read("dos_weight_L", s.dos_weight_L);
    r.read("fast_transverse_share", s.fast_transverse_share);
    r.read("c11", s.c11);
    r.read("c12", s.c12);
    r.read("c44", s.c44);
    r.read("isotope_rate_B", s.isotope_rate_B);
    r.read("anharmonic_rate_A", s.anharmonic_rate_A);
    r.read("tt_decay_fraction", s.tt_decay_fraction);
    {
        JsonReader nl = r.child("nonlinear");
        nl.read("beta", s.nonlinear.beta);
        nl.read("gamma", s.nonlinear.gamma);
        nl.read("lambda", s.nonlinear.lambda);
        nl.read("mu", s.nonlinear.mu);
        nl.finish();
    }
    r.read("bandgap", s.bandgap);
    r.read("pair_energy", s.pair_energy);
    r.read("debye_frequency", s.debye_frequency);
    r.read("charge_trap_length", s.charge_trap_length);
    r.read("crystal_rotation_deg", s.crystal_rotation_deg);
    r.finish();
    return s;
}

LifetimeRecord read_lifetime(JsonReader r) {
    LifetimeRecord l;
    r.require("sommerfeld_gamma", l.sommerfeld_gamma);
    r.require("lambda_mass", l.lambda_mass);
    r.require("atomic_density", l.atomic_density);
    r.require("critical_temperature", l.critical_temperature);
    r.read("alpha2_av", l.alpha2_av);
    r.read("debye_temperature", l.debye_temperature);
    r.finish();
    return l;
}

}  // namespace

MaterialDatabase MaterialDatabase::from_json_text(const std::string& text) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError({std::string("materials: parse error: ") + e.what()});
    }
    std::vector<std::string> problems;
    JsonReader root(j, "", problems);
    MaterialDatabase db;
    root.read("version", db.version);
    db.substrate_ = read_substrate(root.child("substrate"));
    if (const auto* arr = root.raw("superconductors")) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
            auto s = read_sc(JsonReader((*arr)[i], "superconductors[" + std::to_string(i) + "]", problems));
            db.sc_[s.name] = s;
        }
    }
    if (const auto* arr = root.raw("normal_metals")) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
            auto n = read_nm(JsonReader((*arr)[i], "normal_metals[" + std::to_string(i) + "]", problems));
            db.nm_[n.name] = n;
        }
    }
    if (const auto* obj = root.raw("lifetime_inputs")) {
        if (!obj->is_object()) {
            problems.push_back("lifetime_inputs: expected an object");
        } else {
            for (auto it = obj->begin(); it != obj->end(); ++it)
                db.lifetime_[it.key()] = read_lifetime(JsonReader(it.value(), "lifetime_inputs." + it.key(), problems));
        }
    }
    {
        JsonReader t = root.child("ti_phonon_dos");
        double width = 0;
        t.read("bin_width_meV", width);
        std::vector<std::vector<double>> bins;
        t.read("bins", bins);
        for (const auto& b : bins) {
            if (b.size() != 2) {
                problems.push_back("ti_phonon_dos.bins: each bin is [omega_meV, value]");
                break;
            }
            db.ti_dos_.push_back({b[0], width, b[1]});
        }
        t.finish();
    }
    root.finish();
    detail::throw_if_problems(problems);

    try {
        db.substrate_.validate();
        for (const auto& [_, s] : db.sc_) s.validate();
        for (const auto& [_, n] : db.nm_) n.validate();
    } catch (const InvalidInput& e) {
        throw ValidationError({std::string("materials: ") + e.what()});
    }
    return db;
}

MaterialDatabase MaterialDatabase::bundled() {
    static const MaterialDatabase db = from_json_text(kBundledMaterialsJson);
    return db;
}

MaterialDatabase MaterialDatabase::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open materials file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

const SuperconductorParams& MaterialDatabase::superconductor(const std::string& name) const {
    auto it = sc_.find(name);
    if (it == sc_.end()) throw InvalidInput("unknown superconductor '" + name + "'");
    return it->second;
}

const NormalMetalParams& MaterialDatabase::normal_metal(const std::string& name) const {
    auto it = nm_.find(name);
    if (it == nm_.end()) throw InvalidInput("unknown normal metal '" + name + "'");
    return it->second;
}

const LifetimeRecord& MaterialDatabase::lifetime_record(const std::string& name) const {
    auto it = lifetime_.find(name);
    if (it == lifetime_.end()) throw InvalidInput("no lifetime inputs for '" + name + "'");
    return it->second;
}

TiLifetimeInputs MaterialDatabase::ti_inputs() const {
    const auto& rec = lifetime_record("Ti");
    if (!rec.alpha2_av) throw InvalidInput("Ti lifetime inputs lack alpha2_av");
    return rec.inputs(*rec.alpha2_av);
}

std::string MaterialDatabase::report_csv() const {
    const double wT = substrate_.dos_weight_T, wL = substrate_.dos_weight_L;
    std::ostringstream os;
    os << "material,rho_g_cm3,v_T_um_ns,v_L_um_ns,v_s_um_ns,eta_T,eta_L,p_abs,gap_ueV,tau0_ph_ns\n";
    os << std::fixed;
    auto row = [&](const std::string& name, double rho, double vT, double vL, double eT, double eL) {
        os << name << ',' << std::setprecision(3) << rho << ',' << vT << ',' << vL << ','
           << std::setprecision(2) << weighted_sound_speed(vT, vL, wT, wL) << ',' << std::setprecision(3) << eT
           << ',' << eL << ',' << absorption_probability(eT, eL, wT, wL);
    };
    for (const char* name : {"Al", "Nb", "Ti"}) {
        if (!has_superconductor(name)) continue;
        const auto& s = superconductor(name);
        row(s.name, s.mass_density, s.v_T, s.v_L, s.eta_T, s.eta_L);
        os << ',' << std::setprecision(0) << s.gap << ',' << std::setprecision(5) << s.phonon_lifetime << '\n';
    }
    for (const auto& [name, n] : nm_) {
        row(n.name, n.mass_density, n.v_T, n.v_L, n.eta_T, n.eta_L);
        os << ",,\n";
    }
    return os.str();
}

}  // namespace qpsim
