#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "qpsim/materials.hpp"
#include "qpsim/rng.hpp"
#include "qpsim/vec3.hpp"

namespace qpsim {

enum class Branch : std::uint8_t { Longitudinal = 0, SlowTransverse = 1, FastTransverse = 2 };

const char* branch_name(Branch b);

struct DispersionSolution {
    std::array<double, 3> phase_velocity{};  // indexed by Branch, um/ns
    std::array<Vec3, 3> polarization{};
    std::array<Vec3, 3> group_velocity{};
    bool degenerate = false;

    double phase(Branch b) const { return phase_velocity[static_cast<int>(b)]; }
    const Vec3& group(Branch b) const { return group_velocity[static_cast<int>(b)]; }
};

// k_hat in the crystal frame.
DispersionSolution christoffel_solve(const Vec3& k_hat, const SubstrateParams& s);

// Rates in 1/ns for a phonon frequency in Hz.
double isotope_scattering_rate(double nu_Hz, const SubstrateParams& s);
double anharmonic_rate(double nu_Hz, const SubstrateParams& s);

// Elastic constants of the Voigt-averaged isotropic solid with the same density.
SubstrateParams isotropic_equivalent(const SubstrateParams& s);

enum class DecayKernel { Standard, UniformSplit };

struct Daughter {
    double energy;  // meV
    Branch branch;
    Vec3 k_hat;     // lab frame
};

struct DecayProducts {
    Daughter first;
    Daughter second;
};

// Unnormalized daughter spectra of the isotropic-approximation decay.
// x is the first daughter's wavevector in units of the parent's, d = vL/vT.
double decay_kernel_lt(double x, double d);
double decay_kernel_tt(double x, double d, const NonlinearElastic& c);

// Lab-frame propagation model used by the transport loop. Immutable after
// construction and shared across workers.
class PhononModel {
public:
    PhononModel(const SubstrateParams& s, bool anisotropic, DecayKernel kernel = DecayKernel::Standard);

    bool anisotropic() const { return anisotropic_; }
    const SubstrateParams& substrate() const { return sub_; }

    Vec3 group_velocity(const Vec3& k_hat_lab, Branch b) const;
    double phase_velocity(const Vec3& k_hat_lab, Branch b) const;

    Branch sample_branch(Rng& rng) const;
    std::pair<Vec3, Branch> sample_isotope_scatter(Rng& rng) const;
    DecayProducts sample_anharmonic_decay(Rng& rng, double energy_meV, const Vec3& k_hat_lab) const;

    double isotope_rate(double energy_meV) const;
    double anharmonic_rate(double energy_meV, Branch b) const;

    Vec3 to_crystal(const Vec3& lab) const;
    Vec3 to_lab(const Vec3& crystal) const;

private:
    std::array<double, 3> speeds_crystal(const Vec3& kc) const;

    SubstrateParams sub_;
    bool anisotropic_;
    DecayKernel kernel_;
    double d_;  // vL / vT
    double lt_max_ = 0, tt_max_ = 0;
    double cos_rot_ = 1, sin_rot_ = 0;
    double iso_coeff_ = 0, anh_coeff_ = 0;  // per ns per meV^4, meV^5
};

}  // namespace qpsim
