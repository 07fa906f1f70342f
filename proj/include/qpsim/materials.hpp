#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qpsim {

// Nonlinear elastic constants entering the L -> T+T / L -> L+T kernels (GPa).
struct NonlinearElastic {
    double beta = -42.9;
    double gamma = -94.5;
    double lambda = 52.4;
    double mu = 68.0;
};

struct SubstrateParams {
    std::string name = "Si";
    double mass_density = 2.329;      // g/cm^3
    double v_transverse = 5.41;       // um/ns, isotropic-mode speeds
    double v_longitudinal = 9.0;      // um/ns
    double dos_weight_T = 0.9075;
    double dos_weight_L = 0.0925;
    double fast_transverse_share = 0.5855;  // FT fraction of the transverse weight
    double c11 = 165.7, c12 = 63.9, c44 = 79.6;  // GPa
    double isotope_rate_B = 2.43e-42;   // s^3
    double anharmonic_rate_A = 7.41e-56;  // s^4
    double tt_decay_fraction = 0.74;    // share of L decays going to T+T
    NonlinearElastic nonlinear;
    double bandgap = 1.17;           // eV
    double pair_energy = 3.6;        // eV
    double debye_frequency = 15.0;   // THz
    double charge_trap_length = 300; // um
    double crystal_rotation_deg = 45.0;  // crystal [100] vs chip x edge

    void validate() const;
};

struct SuperconductorParams {
    std::string name;
    double mass_density = 0;  // g/cm^3
    double v_T = 0, v_L = 0, v_s = 0;  // um/ns
    double eta_T = 0, eta_L = 0, p_abs = 0;
    double gap = 0;             // ueV
    double gap_bulk = 0;        // ueV
    double gap_thickness_coeff = 0;  // ueV*nm
    double phonon_lifetime = 0;  // ns
    std::optional<double> qp_lifetime;        // ns
    std::optional<double> cooper_pair_density;  // um^-3
    std::optional<double> normal_diffusion;   // um^2/ns

    double gap_meV() const { return gap * 1e-3; }
    void validate() const;
};

struct NormalMetalParams {
    std::string name;
    double mass_density = 0;
    double v_T = 0, v_L = 0, v_s = 0;
    double eta_T = 0, eta_L = 0, p_abs = 0;
    double coupling_beta_L = 0;
    double fermi_velocity = 0;  // um/ns
    double fermi_energy = 0;    // eV
    double dos_fermi = 0;       // J^-1 m^-3

    void validate() const;
};

struct TiLifetimeInputs {
    double alpha2_av = 1.3;          // meV
    double dos_fermi = 2.915e22;     // single spin, states / (eV cm^3)
    double atomic_density = 5.66e22; // atoms / cm^3
    double critical_temperature = 0.39;  // K
    double gap() const;              // ueV, 1.76 k_B Tc
};

// Bundled estimates behind a TiLifetimeInputs record.
struct LifetimeRecord {
    double sommerfeld_gamma = 0;   // mJ / (mol K^2)
    double lambda_mass = 0;
    double atomic_density = 0;     // cm^-3
    double critical_temperature = 0;  // K
    std::optional<double> alpha2_av;  // meV, quoted value if any
    std::optional<double> debye_temperature;  // K

    // Single-spin N(0) per atom per eV from gamma = (pi^2/3) kB^2 N_tot (1 + lambda).
    double dos_per_atom() const;
    TiLifetimeInputs inputs(double alpha2_meV) const;
};

// One histogram bin of a phonon density of states F(Omega).
struct DosBin {
    double omega;  // bin centre, meV
    double width;  // meV
    double value;  // arbitrary normalization
};

double weighted_sound_speed(double v_T, double v_L, double dos_T, double dos_L);
double absorption_probability(double eta_T, double eta_L, double dos_T, double dos_L);

double gap_vs_thickness(double d_nm, double gap_bulk_ueV, double coeff_ueV_nm);
double bilayer_average_gap(double d1_nm, double d2_nm, double gap_bulk_ueV, double coeff_ueV_nm);

// E_ph in ueV, rate in 1/ns.
double pair_breaking_rate(double e_ph_ueV, const SuperconductorParams& sc);
double pair_breaking_mean_free_path(double e_ph_ueV, const SuperconductorParams& sc);

// omega in rad/ns, rate in 1/ns.
double normal_phonon_rate(double omega, const NormalMetalParams& nm);
double normal_phonon_rate_for_energy(double e_ph_meV, const NormalMetalParams& nm);
double normal_mean_free_path(double e_ph_meV, const NormalMetalParams& nm);

// (2 eF / 3)^2 N(0) / (2 rho vL^2), all converted to SI.
double free_electron_coupling(const NormalMetalParams& nm);

double ti_phonon_lifetime(const TiLifetimeInputs& in);

double alpha2_from_lambda(double lambda_mass, std::span<const DosBin> dos);

// E_qp in units of the gap, result in um.
double qp_diffusion_length(double e_qp_over_gap, const SuperconductorParams& sc);

struct DosWeights {
    double transverse;
    double longitudinal;
};
// Debye weights from 1/v^3 with two transverse branches.
DosWeights debye_dos_weights(double v_T, double v_L);

// Bulk Debye-model F(Omega) ~ Omega^2 below the cutoff, used for cross-checks.
std::vector<DosBin> debye_dos_table(double cutoff_meV, int bins);

class MaterialDatabase {
public:
    static MaterialDatabase bundled();
    static MaterialDatabase from_json_text(const std::string& text);
    static MaterialDatabase from_file(const std::string& path);

    const SuperconductorParams& superconductor(const std::string& name) const;
    const NormalMetalParams& normal_metal(const std::string& name) const;
    const SubstrateParams& substrate() const { return substrate_; }
    const LifetimeRecord& lifetime_record(const std::string& name) const;
    // Ti inputs with the quoted <alpha^2>.
    TiLifetimeInputs ti_inputs() const;
    std::span<const DosBin> ti_phonon_dos() const { return ti_dos_; }
    bool has_superconductor(const std::string& n) const { return sc_.count(n) != 0; }
    bool has_normal_metal(const std::string& n) const { return nm_.count(n) != 0; }

    void set_substrate(const SubstrateParams& s) { substrate_ = s; }
    void set_superconductor(const SuperconductorParams& s) { sc_[s.name] = s; }
    void set_normal_metal(const NormalMetalParams& n) { nm_[n.name] = n; }

    // Rows: material, rho, vT, vL, vs, etaT, etaL, pabs, gap, tau0.
    std::string report_csv() const;

    std::string version;

private:
    SubstrateParams substrate_;
    std::map<std::string, SuperconductorParams> sc_;
    std::map<std::string, NormalMetalParams> nm_;
    std::map<std::string, LifetimeRecord> lifetime_;
    std::vector<DosBin> ti_dos_;
};

}  // namespace qpsim
