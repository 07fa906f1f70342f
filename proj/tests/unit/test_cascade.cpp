#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qpsim/cascade.hpp"
#include "qpsim/errors.hpp"
#include "qpsim/materials.hpp"
#include "qpsim/units.hpp"
#include "stats.hpp"

using namespace qpsim;
using doctest::Approx;

namespace {

const MaterialDatabase& db() {
    static const MaterialDatabase d = MaterialDatabase::bundled();
    return d;
}

SuperconductingFilm al_film(double thickness_um) { return {db().superconductor("Al"), thickness_um}; }

// Independent 0-D cascade: densities tabulated in phi (E = gap + w sin^2 phi)
// and sampled by inverse CDF, no accept-reject.
struct ZeroDCascade {
    double gap;
    Rng rng;

    double split(double omega) {
        const double w = omega - 2 * gap;
        if (w <= 0) return gap;
        // Kaplan split density times dE/dphi; the endpoint singularities cancel
        auto pdf = [&](double phi) {
            const double s = std::sin(phi);
            const double e = gap + w * s * s, f = omega - e;
            return 2.0 * (e * f + gap * gap) / std::sqrt((e + gap) * (f + gap));
        };
        const testutil::TabulatedSampler t(pdf, 0.0, 0.5 * units::kPi, 512);
        const double phi = t(rng);
        return gap + w * std::sin(phi) * std::sin(phi);
    }

    double relax(double e) {
        const double w = e - gap;
        auto pdf = [&](double phi) {
            const double s = std::sin(phi), c = std::cos(phi);
            const double ef = gap + w * s * s, om = e - ef;
            return om * om * (1 - gap * gap / (e * ef)) * ef * c / std::sqrt(ef + gap);
        };
        const testutil::TabulatedSampler t(pdf, 0.0, 0.5 * units::kPi, 512);
        const double phi = t(rng);
        return w * std::cos(phi) * std::cos(phi);
    }

    // QP count from one phonon with every pair-breaking phonon reabsorbed.
    int qp_count(double omega) {
        int n = 0;
        std::vector<double> pending{omega};
        while (!pending.empty()) {
            const double om = pending.back();
            pending.pop_back();
            const double e1 = split(om);
            for (double e : {e1, om - e1}) {
                while (e >= 3 * gap) {
                    const double ph = relax(e);
                    e -= ph;
                    if (ph >= 2 * gap) pending.push_back(ph);
                }
                ++n;
            }
        }
        return n;
    }

    int injector_count(double pair_energy) {
        const double e1 = split(pair_energy);
        int count = 1;
        for (double e : {e1, pair_energy - e1}) {
            while (e >= 3 * gap) {
                const double ph = relax(e);
                e -= ph;
                if (ph >= 2 * gap) ++count;
            }
        }
        return count;
    }
};

}  // namespace

TEST_CASE("escape probability") {
    CHECK(escape_probability(1.0, INFINITY) == 1.0);
    CHECK(escape_probability(0.5, 1.0) == Approx(std::exp(-1.0)));
    const auto& al = db().superconductor("Al");
    const double lam = pair_breaking_mean_free_path(2 * al.gap, al);
    CHECK(escape_probability(0.24, lam) == Approx(0.575).epsilon(2e-3));
    CHECK_THROWS_AS(escape_probability(-1, 1), DomainError);
}

TEST_CASE("phonon at exactly 2 gap") {
    const auto film = al_film(0.12);
    Rng rng = make_stream(21, 0);
    for (int i = 0; i < 100; ++i) {
        const auto out = sc_cascade(2 * film.gap(), film, rng);
        CHECK(out.qp_count == 2);
        CHECK(out.returned_phonons.empty());
        for (double e : out.qp_energies) CHECK(e == Approx(film.gap()));
    }
}

TEST_CASE("phonon just below 4 gap breaks one pair") {
    const auto film = al_film(0.12);
    const double e = 4 * film.gap() * (1 - 1e-9);
    Rng rng = make_stream(22, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto out = sc_cascade(e, film, rng);
        CHECK(out.qp_count == 2);
        for (double w : out.returned_phonons) CHECK(w < 2 * film.gap());
        CHECK(out.deposited + out.returned_energy() == Approx(e).epsilon(1e-13));
    }
}

TEST_CASE("cascade invariants") {
    for (double d : {0.03, 0.12, 1.0, 50.0}) {
        const auto film = al_film(d);
        const double gap = film.gap();
        Rng rng = make_stream(23, static_cast<std::uint64_t>(d * 1000));
        for (int i = 0; i < 2000; ++i) {
            const double e = gap * (2 + 30 * uniform01(rng));
            const auto out = sc_cascade(e, film, rng);
            CHECK(out.deposited + out.returned_energy() == Approx(e).epsilon(1e-12));
            CHECK(static_cast<std::size_t>(out.qp_count) == out.qp_energies.size());
            for (double q : out.qp_energies) {
                CHECK(q >= gap);
                CHECK(q < 3 * gap);
            }
            if (d >= 50.0)
                for (double w : out.returned_phonons) CHECK(w < 2 * gap);
        }
    }
}

TEST_CASE("thick-film QP count matches the 0-D oracle") {
    const auto film = al_film(1.0e4);
    const double gap = film.gap();
    const int n = 100000;
    Rng rng = make_stream(24, 0);
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double q = static_cast<double>(sc_cascade(6 * gap, film, rng).qp_count);
        s1 += q;
        s2 += q * q;
    }
    ZeroDCascade oracle{gap, make_stream(25, 0)};
    double o1 = 0, o2 = 0;
    for (int i = 0; i < n; ++i) {
        const double q = oracle.qp_count(6 * gap);
        o1 += q;
        o2 += q * q;
    }
    const double m = s1 / n, mo = o1 / n;
    const double var = (s2 / n - m * m) / n + (o2 / n - mo * mo) / n;
    MESSAGE("mean QPs " << m << " oracle " << mo);
    CHECK(std::abs(m - mo) <= 2 * std::sqrt(var));
}

TEST_CASE("deposited fraction grows with film thickness") {
    const double gap = db().superconductor("Al").gap_meV();
    double last = -1;
    for (double d_nm : {30.0, 120.0, 1000.0, 10000.0}) {
        const auto film = al_film(d_nm * 1e-3);
        Rng rng = make_stream(26, 0);
        double dep = 0;
        for (int i = 0; i < 10000; ++i) dep += sc_cascade(8 * gap, film, rng).deposited / (8 * gap);
        dep /= 10000;
        CHECK(dep >= last);
        last = dep;
    }
}

TEST_CASE("vanishing gap reduces the split to uniform") {
    Rng rng = make_stream(27, 0);
    const double omega = 1.0, gap = 1e-9;
    std::vector<double> x(100000);
    for (double& v : x) v = sample_pair_split(rng, omega, gap) / omega;
    CHECK(testutil::ks_test(x, [](double u) { return std::clamp(u, 0.0, 1.0); }) > 0.01);
}

TEST_CASE("split sampler matches the Kaplan density") {
    const double gap = 0.18, omega = 1.1;
    Rng rng = make_stream(28, 0);
    std::vector<double> x(100000);
    for (double& v : x) v = sample_pair_split(rng, omega, gap);
    // numerical CDF of the density in phi
    const double w = omega - 2 * gap;
    const int n = 20000;
    std::vector<double> cdf(n + 1, 0.0);
    auto pdf = [&](double phi) {
        const double s = std::sin(phi), e = gap + w * s * s, f = omega - e;
        return (e * f + gap * gap) / std::sqrt((e + gap) * (f + gap));
    };
    const double h = 0.5 * units::kPi / n;
    for (int i = 1; i <= n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (pdf((i - 1) * h) + pdf(i * h)) * h;
    auto cdf_e = [&](double e) {
        const double phi = std::asin(std::sqrt(std::clamp((e - gap) / w, 0.0, 1.0)));
        const double pos = phi / h;
        const int i = std::min(n - 1, static_cast<int>(pos));
        return (cdf[i] + (cdf[i + 1] - cdf[i]) * (pos - i)) / cdf[n];
    };
    CHECK(testutil::ks_test(x, cdf_e) > 0.01);
}

TEST_CASE("electron relaxation spectrum chi-square") {
    Rng rng = make_stream(29, 0);
    const int n = 100000, bins = 50;
    std::vector<double> hist(bins, 0.0);
    for (int i = 0; i < n; ++i) {
        const double x = sample_electron_relaxation(rng, 2.0) / 2.0;
        hist[std::min(bins - 1, static_cast<int>(x * bins))] += 1;
    }
    // f(x) = x (1 - x)^2 integrates to 1/12; bin integrals from the antiderivative
    auto F = [](double x) { return 12.0 * (x * x / 2 - 2 * x * x * x / 3 + x * x * x * x / 4); };
    double chi2 = 0;
    for (int b = 0; b < bins; ++b) {
        const double expect = n * (F((b + 1.0) / bins) - F(static_cast<double>(b) / bins));
        chi2 += (hist[b] - expect) * (hist[b] - expect) / expect;
    }
    CHECK(testutil::chi2_pvalue(chi2, bins - 1) > 0.01);
}

TEST_CASE("normal-metal cascade") {
    const auto& cu = db().normal_metal("Cu");
    const double th = 2 * 0.19125;
    NormalMetalFilm film{cu, 10.0, th};
    Rng rng = make_stream(30, 0);
    const auto low = nm_cascade(0.9 * th, film, rng);
    CHECK(low.deposited == 0.9 * th);
    CHECK(low.returned_phonons.empty());
    for (double e_in : {0.36, th}) {
        double returned_above = 0;
        for (int i = 0; i < 10000; ++i) {
            const auto out = nm_cascade(e_in, film, rng);
            CHECK(out.deposited + out.returned_energy() == Approx(e_in).epsilon(1e-12));
            for (double w : out.returned_phonons)
                if (w >= th) returned_above += w;
        }
        CHECK(returned_above / (10000 * e_in) < 0.01);
    }
    // energetic phonons still conserve energy
    NormalMetalFilm thin{cu, 0.1, th};
    for (int i = 0; i < 2000; ++i) {
        const auto out = nm_cascade(20.0, thin, rng);
        CHECK(out.deposited + out.returned_energy() == Approx(20.0).epsilon(1e-12));
    }
}

TEST_CASE("injector yield") {
    const double gap = 0.18;
    Rng rng = make_stream(31, 0);
    CHECK(injector_yield(2 * gap, gap, rng, 1000) == 1.0);
    CHECK(injector_yield(4 * gap * (1 - 1e-9), gap, rng, 100000) == 1.0);
    ZeroDCascade oracle{gap, make_stream(32, 0)};
    double o = 0;
    for (int i = 0; i < 20000; ++i) o += oracle.injector_count(4 * gap * (1 - 1e-9));
    CHECK(o / 20000 == 1.0);
    const double y = injector_yield(1.0, gap, rng, 1000000);
    MESSAGE("yield " << y);
    CHECK(y == Approx(1.673).epsilon(0.01 / 1.673));
}
