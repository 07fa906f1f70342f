#include "qpsim/cascade.hpp"

#include <cmath>
#include <numeric>

#include "qpsim/errors.hpp"
#include "qpsim/units.hpp"

namespace qpsim {

namespace {
constexpr double kHalfPi = 0.5 * units::kPi;
}

double SuperconductingFilm::mean_free_path(double e) const {
    return pair_breaking_mean_free_path(e * 1e3, params);
}

double NormalMetalFilm::mean_free_path(double e) const { return normal_mean_free_path(e, params); }

double CascadeOutcome::returned_energy() const {
    return std::accumulate(returned_phonons.begin(), returned_phonons.end(), 0.0);
}

double escape_probability(double l, double lambda) {
    if (!(l >= 0) || !(lambda > 0)) throw DomainError("escape path and mean free path must be positive");
    if (std::isinf(lambda)) return 1.0;
    return std::exp(-2.0 * l / lambda);
}

// With E = gap + (omega - 2 gap) sin^2(phi) the split density in phi is
// (E(omega-E) + gap^2) / sqrt((E + gap)(omega - E + gap)), bounded by its value at E = omega/2.
double sample_pair_split(Rng& rng, double omega, double gap) {
    const double w = omega - 2.0 * gap;
    if (w < 0) throw DomainError("phonon energy below 2*gap cannot break pairs");
    if (w == 0) return gap;
    auto h = [&](double e) { return (e * (omega - e) + gap * gap) / std::sqrt((e + gap) * (omega - e + gap)); };
    const double hmax = h(0.5 * omega) * (1.0 + 1e-12);
    for (;;) {
        const double s = std::sin(kHalfPi * uniform01(rng));
        const double e = gap + w * s * s;
        if (uniform01(rng) * hmax <= h(e)) return e;
    }
}

// Final energy E' = gap + w sin^2(phi), w = e - gap, emitted omega = w cos^2(phi).
// Density in phi: omega^2 (1 - gap^2/(e E')) E' cos(phi) / sqrt(E' + gap).
double sample_qp_relaxation(Rng& rng, double e, double gap) {
    const double w = e - gap;
    if (!(w > 0)) throw DomainError("quasiparticle at the gap edge cannot relax");
    const double coh = 1.0 - gap * gap / (e * e);
    const double u_star = std::max(0.0, (0.5 * w - 2.5 * gap) / (3.0 * w));
    const double bound = w * w * coh * std::pow(1.0 - u_star, 2.5) * std::sqrt(gap + w * u_star) * (1.0 + 1e-12);
    for (;;) {
        const double phi = kHalfPi * uniform01(rng);
        const double c = std::cos(phi), s = std::sin(phi);
        const double ef = gap + w * s * s;
        const double omega = w * c * c;
        const double g = omega * omega * (1.0 - gap * gap / (e * ef)) * ef * c / std::sqrt(ef + gap);
        if (uniform01(rng) * bound <= g) return omega;
    }
}

double sample_electron_relaxation(Rng& rng, double e) {
    if (!(e > 0)) throw DomainError("excitation energy must be positive");
    constexpr double fmax = 4.0 / 27.0;
    for (;;) {
        const double x = uniform01(rng);
        const double f = x * (1 - x) * (1 - x);
        if (uniform01(rng) * fmax <= f) return x * e;
    }
}

double sample_escape_path(Rng& rng, double d) { return uniform01(rng) < 0.5 ? 1.5 * d : 0.5 * d; }

void sc_cascade(double e_ph, const SuperconductingFilm& film, Rng& rng, CascadeOutcome& out) {
    const double gap = film.gap();
    if (e_ph < 2.0 * gap) throw DomainError("phonon energy below 2*gap cannot break pairs");
    out.clear();
    std::vector<double> pending{e_ph};
    while (!pending.empty()) {
        const double omega = pending.back();
        pending.pop_back();
        const double e1 = sample_pair_split(rng, omega, gap);
        double qps[2] = {e1, omega - e1};
        for (double e : qps) {
            while (e >= 3.0 * gap) {
                const double w = sample_qp_relaxation(rng, e, gap);
                e -= w;
                if (w < 2.0 * gap) {
                    out.returned_phonons.push_back(w);
                } else if (uniform01(rng) < escape_probability(sample_escape_path(rng, film.thickness),
                                                               film.mean_free_path(w))) {
                    out.returned_phonons.push_back(w);
                } else {
                    pending.push_back(w);
                }
            }
            out.qp_count += 1;
            out.deposited += e;
            out.qp_energies.push_back(e);
        }
    }
}

CascadeOutcome sc_cascade(double e_ph, const SuperconductingFilm& film, Rng& rng) {
    CascadeOutcome out;
    sc_cascade(e_ph, film, rng, out);
    return out;
}

void nm_cascade(double e_ph, const NormalMetalFilm& film, Rng& rng, CascadeOutcome& out) {
    if (!(e_ph > 0)) throw DomainError("phonon energy must be positive");
    out.clear();
    const double th = film.threshold;
    std::vector<double> excitations;
    auto absorb = [&](double omega) {
        const double e1 = omega * uniform01(rng);
        excitations.push_back(e1);
        excitations.push_back(omega - e1);
    };
    if (e_ph < th) {
        out.deposited = e_ph;
        return;
    }
    absorb(e_ph);
    while (!excitations.empty()) {
        double e = excitations.back();
        excitations.pop_back();
        while (e >= th) {
            const double w = sample_electron_relaxation(rng, e);
            e -= w;
            if (w < th) {
                out.returned_phonons.push_back(w);
            } else if (uniform01(rng) < escape_probability(sample_escape_path(rng, film.thickness),
                                                           film.mean_free_path(w))) {
                out.returned_phonons.push_back(w);
            } else {
                absorb(w);
            }
        }
        out.deposited += e;
    }
}

CascadeOutcome nm_cascade(double e_ph, const NormalMetalFilm& film, Rng& rng) {
    CascadeOutcome out;
    nm_cascade(e_ph, film, rng, out);
    return out;
}

int injector_cascade_count(Rng& rng, double pair_energy, double gap) {
    if (pair_energy < 2.0 * gap) throw DomainError("pair energy below 2*gap");
    const double e1 = sample_pair_split(rng, pair_energy, gap);
    int count = 1;  // recombination of the two relaxed quasiparticles
    for (double e : {e1, pair_energy - e1}) {
        while (e >= 3.0 * gap) {
            const double w = sample_qp_relaxation(rng, e, gap);
            e -= w;
            if (w >= 2.0 * gap) ++count;
        }
    }
    return count;
}

double injector_yield(double pair_energy, double gap, Rng& rng, std::int64_t trials) {
    if (trials <= 0) throw InvalidInput("trial count must be positive");
    std::int64_t total = 0;
    for (std::int64_t i = 0; i < trials; ++i) total += injector_cascade_count(rng, pair_energy, gap);
    return static_cast<double>(total) / static_cast<double>(trials);
}

}  // namespace qpsim
