#include <doctest.h>

#include <cmath>

#include "qpsim/errors.hpp"
#include "qpsim/materials.hpp"
#include "qpsim/units.hpp"

using namespace qpsim;
using doctest::Approx;

namespace {
const MaterialDatabase& db() {
    static const MaterialDatabase d = MaterialDatabase::bundled();
    return d;
}
constexpr double kWT = 0.9075, kWL = 0.0925;
}  // namespace

TEST_CASE("weighted sound speed reproduces the table") {
    CHECK(std::abs(weighted_sound_speed(3.251, 6.808, kWT, kWL) - 3.58) <= 0.01);
    CHECK(std::abs(weighted_sound_speed(2.168, 5.139, kWT, kWL) - 2.44) <= 0.01);
    CHECK(weighted_sound_speed(4.2, 4.2, 0.5, 0.5) == Approx(4.2).epsilon(1e-15));
    const double table[4][3] = {{3.251, 6.808, 3.58}, {2.168, 5.139, 2.44}, {3.33, 6.254, 3.60}, {2.38, 4.828, 2.61}};
    for (const auto& r : table) CHECK(std::abs(weighted_sound_speed(r[0], r[1], kWT, kWL) - r[2]) <= 0.01);
}

TEST_CASE("absorption probability reproduces the table") {
    CHECK(std::abs(absorption_probability(0.776, 0.98, kWT, kWL) - 0.795) <= 0.001);
    CHECK(std::abs(absorption_probability(0.727, 0.826, kWT, kWL) - 0.736) <= 0.001);
    CHECK(absorption_probability(1.0, 1.0, 0.3, 0.7) == Approx(1.0));
    const double table[4][3] = {{0.776, 0.98, 0.795}, {0.736, 0.835, 0.745}, {0.776, 0.939, 0.792}, {0.727, 0.826, 0.736}};
    for (const auto& r : table) CHECK(std::abs(absorption_probability(r[0], r[1], kWT, kWL) - r[2]) <= 0.001);
    CHECK_THROWS_AS(absorption_probability(1.2, 0.5, kWT, kWL), InvalidInput);
    CHECK_THROWS_AS(absorption_probability(0.5, 0.5, 0.7, 0.7), InvalidInput);
}

TEST_CASE("Debye weights are an alternative near the fitted pair") {
    const auto w = debye_dos_weights(5.41, 9.0);
    CHECK(w.transverse + w.longitudinal == Approx(1.0));
    CHECK(w.transverse == Approx(0.9021).epsilon(1e-3));
}

TEST_CASE("gap versus thickness") {
    CHECK(gap_vs_thickness(40, 180, 600) == Approx(195.0));
    CHECK(gap_vs_thickness(1e12, 180, 600) == Approx(180.0));
    CHECK(std::lround(bilayer_average_gap(40, 80, 180, 600)) == 191);
    CHECK_THROWS_AS(gap_vs_thickness(0, 180, 600), InvalidInput);
}

TEST_CASE("pair-breaking rate") {
    const auto& al = db().superconductor("Al");
    CHECK(pair_breaking_rate(2 * al.gap, al) == Approx(1.0 / 0.242));
    CHECK(pair_breaking_rate(2 * al.gap, al) == Approx(4.13).epsilon(2e-3));
    CHECK(pair_breaking_mean_free_path(2 * al.gap, al) == Approx(0.866).epsilon(1e-3));
    CHECK(pair_breaking_rate(4 * al.gap, al) == Approx(1.58 / 0.242));
    for (const char* m : {"Al", "Nb", "Ti"}) {
        const auto& sc = db().superconductor(m);
        CHECK(pair_breaking_rate(2 * sc.gap, sc) == 1.0 / sc.phonon_lifetime);
    }
    CHECK_THROWS_AS(pair_breaking_rate(1.9 * al.gap, al), DomainError);
}

TEST_CASE("normal-metal phonon rate") {
    const auto& cu = db().normal_metal("Cu");
    const double inv = 1.0 / normal_phonon_rate_for_energy(0.360, cu);
    CHECK(inv == Approx(1.2).epsilon(0.05));
    for (double w : {0.1, 1.7, 33.0}) CHECK(normal_phonon_rate(2 * w, cu) == 2 * normal_phonon_rate(w, cu));
    // (2 eF/3)^2 N(0) / (2 rho vL^2) by hand: 5.590e-37 J^2 * 1.12e47 / 4.163e11
    CHECK(free_electron_coupling(cu) == Approx(0.1504).epsilon(2e-3));
}

TEST_CASE("Ti phonon lifetime") {
    const auto in = db().ti_inputs();
    CHECK(ti_phonon_lifetime(in) == Approx(0.414).epsilon(0.05));
    auto twice = in;
    twice.alpha2_av *= 2;
    CHECK(ti_phonon_lifetime(twice) == Approx(0.5 * ti_phonon_lifetime(in)).epsilon(1e-14));
    CHECK(in.gap() == Approx(1.76 * units::kBoltzmann_eVK * 0.39 * 1e6));
}

TEST_CASE("Al cross-check of the lifetime formula") {
    const auto& rec = db().lifetime_record("Al");
    REQUIRE(rec.debye_temperature);
    const double cutoff = units::kBoltzmann_eVK * *rec.debye_temperature * 1e3;
    const double a2 = alpha2_from_lambda(rec.lambda_mass, debye_dos_table(cutoff, 200));
    const double tau = ti_phonon_lifetime(rec.inputs(a2));
    CHECK(tau == Approx(0.242).epsilon(0.20));
}

TEST_CASE("alpha^2 from the mass-enhancement factor") {
    const double a2 = alpha2_from_lambda(0.38, db().ti_phonon_dos());
    CHECK(a2 == Approx(1.3).epsilon(0.02));
    CHECK(db().ti_phonon_dos().size() >= 20);
    const DosBin one[] = {{12.0, 0.5, 3.0}};
    CHECK(alpha2_from_lambda(0.5, one) == Approx(0.5 * 12.0 / 6.0));
    std::vector<DosBin> scaled(db().ti_phonon_dos().begin(), db().ti_phonon_dos().end());
    for (auto& b : scaled) b.value *= 7.5;
    CHECK(alpha2_from_lambda(0.38, scaled) == Approx(a2).epsilon(1e-13));
}

TEST_CASE("QP diffusion lengths") {
    const auto& nb = db().superconductor("Nb");
    const auto& al = db().superconductor("Al");
    for (double e = 1.06; e < 5; e += 0.01) CHECK(qp_diffusion_length(e, nb) < 10.0);
    for (double e = 1.001; e <= 1.28; e += 0.001) CHECK(qp_diffusion_length(e, al) >= 200.0);
    for (double e = 1.3; e <= 4.0; e += 0.1) CHECK(qp_diffusion_length(e, al) >= 2.0);
    CHECK(qp_diffusion_length(1.0001, al) >= 10 * qp_diffusion_length(1.1, al));
    CHECK(std::isfinite(qp_diffusion_length(1.0 + 1e-9, al)));
    CHECK_THROWS_AS(qp_diffusion_length(1.0, al), DomainError);
}

TEST_CASE("material database") {
    const auto& d = db();
    CHECK(d.superconductor("Al").gap == 180);
    CHECK(d.superconductor("Nb").gap == 1538);
    CHECK(d.has_normal_metal("Cu"));
    CHECK_THROWS_AS(d.superconductor("Pb"), InvalidInput);
    const std::string csv = d.report_csv();
    CHECK(csv.rfind("material,rho_g_cm3,v_T_um_ns,v_L_um_ns,v_s_um_ns,eta_T,eta_L,p_abs,gap_ueV,tau0_ph_ns\n", 0) == 0);
    CHECK(csv.find("Al,2.700,3.251,6.808,3.58,0.776,0.980,0.795,180") != std::string::npos);
    CHECK(csv.find("Cu,8.930,2.380,4.828,2.61,0.727,0.826,0.736") != std::string::npos);
}

TEST_CASE("database parser rejects unknown keys with paths") {
    try {
        MaterialDatabase::from_json_text(R"({"version":"x","bogus":1})");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        bool found = false;
        for (const auto& p : e.problems()) found = found || p.find("bogus") != std::string::npos;
        CHECK(found);
    }
    CHECK_THROWS_AS(MaterialDatabase::from_json_text("{not json"), ValidationError);
}
