#pragma once

#include <cstdint>
#include <vector>

#include "qpsim/materials.hpp"
#include "qpsim/rng.hpp"

namespace qpsim {

// Energies in meV, lengths in um.
struct SuperconductingFilm {
    SuperconductorParams params;
    double thickness = 0;  // um
    double gap() const { return params.gap_meV(); }
    double mean_free_path(double e_meV) const;
};

struct NormalMetalFilm {
    NormalMetalParams params;
    double thickness = 0;  // um
    double threshold = 0;  // meV, 2 * junction gap
    double mean_free_path(double e_meV) const;
};

struct CascadeOutcome {
    std::int64_t qp_count = 0;
    double deposited = 0;  // meV
    std::vector<double> returned_phonons;  // meV
    std::vector<double> qp_energies;       // meV, superconductors only

    void clear() {
        qp_count = 0;
        deposited = 0;
        returned_phonons.clear();
        qp_energies.clear();
    }
    double returned_energy() const;
};

double escape_probability(double l, double lambda);

// Quasiparticle energy of one member of a pair broken by a phonon of energy omega.
double sample_pair_split(Rng& rng, double omega, double gap);
// Phonon energy emitted by a quasiparticle relaxing from energy e.
double sample_qp_relaxation(Rng& rng, double e, double gap);
// Phonon energy emitted by a normal-metal excitation of energy e, density ~ w (e - w)^2.
double sample_electron_relaxation(Rng& rng, double e);

// Film escape path for an emitted phonon: 3d/2 or d/2 with equal odds.
double sample_escape_path(Rng& rng, double thickness);

void sc_cascade(double e_ph, const SuperconductingFilm& film, Rng& rng, CascadeOutcome& out);
CascadeOutcome sc_cascade(double e_ph, const SuperconductingFilm& film, Rng& rng);

void nm_cascade(double e_ph, const NormalMetalFilm& film, Rng& rng, CascadeOutcome& out);
CascadeOutcome nm_cascade(double e_ph, const NormalMetalFilm& film, Rng& rng);

// Pair-breaking phonons (>= 2 gap) from one broken pair, including the final
// recombination phonon.
int injector_cascade_count(Rng& rng, double pair_energy, double gap);
double injector_yield(double pair_energy, double gap, Rng& rng, std::int64_t trials = 1000000);

}  // namespace qpsim
