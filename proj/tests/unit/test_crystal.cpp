#include <doctest.h>

#include <cmath>

#include "qpsim/crystal.hpp"
#include "qpsim/rng.hpp"
#include "qpsim/units.hpp"

using namespace qpsim;
using doctest::Approx;

namespace {
double speed(double c_GPa, double rho) { return std::sqrt(c_GPa * 1e9 / (rho * 1e3)) * 1e-3; }
}  // namespace

TEST_CASE("Christoffel along [100]") {
    SubstrateParams si;
    const auto sol = christoffel_solve({1, 0, 0}, si);
    CHECK(sol.phase(Branch::Longitudinal) == Approx(speed(si.c11, si.mass_density)).epsilon(1e-10));
    CHECK(sol.phase(Branch::Longitudinal) == Approx(8.43).epsilon(1e-3));
    CHECK(sol.phase(Branch::SlowTransverse) == Approx(speed(si.c44, si.mass_density)).epsilon(1e-10));
    CHECK(sol.degenerate);
}

TEST_CASE("Christoffel along [110] splits the transverse branches") {
    SubstrateParams si;
    const auto sol = christoffel_solve(Vec3{1, 1, 0}.normalized(), si);
    CHECK(sol.phase(Branch::SlowTransverse) == Approx(speed(0.5 * (si.c11 - si.c12), si.mass_density)).epsilon(1e-10));
    CHECK(sol.phase(Branch::FastTransverse) == Approx(speed(si.c44, si.mass_density)).epsilon(1e-10));
    CHECK_FALSE(sol.degenerate);
}

TEST_CASE("isotropic elasticity gives group velocity along k") {
    const SubstrateParams iso = isotropic_equivalent(SubstrateParams{});
    CHECK(iso.c11 == Approx(iso.c12 + 2 * iso.c44));
    Rng rng = make_stream(3, 0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 k = sample_isotropic(rng);
        const auto sol = christoffel_solve(k, iso);
        for (Branch b : {Branch::Longitudinal, Branch::SlowTransverse, Branch::FastTransverse}) {
            const Vec3 v = sol.group(b);
            CHECK(v.cross(k).norm() <= 1e-6 * v.norm());
            CHECK(v.norm() == Approx(sol.phase(b)).epsilon(1e-6));
        }
    }
}

TEST_CASE("Christoffel eigenvalues are real and positive") {
    SubstrateParams si;
    Rng rng = make_stream(4, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto sol = christoffel_solve(sample_isotropic(rng), si);
        CHECK(sol.phase_velocity[1] > 0);
        CHECK(sol.phase_velocity[1] <= sol.phase_velocity[2] + 1e-12);
        CHECK(sol.phase_velocity[2] < sol.phase_velocity[0]);
    }
}

TEST_CASE("bulk rate power laws") {
    SubstrateParams si;
    const double nu = 1e12;
    CHECK(isotope_scattering_rate(2 * nu, si) / isotope_scattering_rate(nu, si) == Approx(16.0));
    CHECK(anharmonic_rate(2 * nu, si) / anharmonic_rate(nu, si) == Approx(32.0));
    CHECK(isotope_scattering_rate(0, si) == 0);
    CHECK(anharmonic_rate(0, si) == 0);
    const double debye = 15e12;
    CHECK(std::isfinite(anharmonic_rate(debye, si)));
    CHECK(std::isfinite(isotope_scattering_rate(debye, si)));
    // lifetime well under 1 us, and well under the ballistic crossing time
    CHECK(1.0 / anharmonic_rate(debye, si) < 1e3);
    CHECK(1.0 / anharmonic_rate(debye, si) < 525.0 / 9.0);
}

TEST_CASE("anharmonic decay conserves energy to machine precision") {
    for (DecayKernel kernel : {DecayKernel::Standard, DecayKernel::UniformSplit}) {
        const PhononModel model(SubstrateParams{}, false, kernel);
        Rng rng = make_stream(5, 0);
        int tt = 0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            const double e = 1.0 + 60.0 * uniform01(rng);
            const auto d = model.sample_anharmonic_decay(rng, e, {0, 0, 1});
            if (std::abs(d.first.energy + d.second.energy - e) > 2.3e-16 * e) {
                CHECK(d.first.energy + d.second.energy == Approx(e).epsilon(2.3e-16));
                break;
            }
            if (d.first.energy <= 0 || d.second.energy <= 0) {
                CHECK(d.first.energy > 0);
                break;
            }
            tt += d.first.branch != Branch::Longitudinal && d.second.branch != Branch::Longitudinal;
        }
        if (kernel == DecayKernel::Standard) CHECK(static_cast<double>(tt) / n == Approx(0.74).epsilon(0.01));
    }
}

TEST_CASE("isotope scatter is uniform and DOS weighted") {
    const SubstrateParams si;
    const PhononModel model(si, false);
    Rng rng = make_stream(6, 0);
    const int n = 1000000;
    Vec3 sum{0, 0, 0};
    int longitudinal = 0;
    for (int i = 0; i < n; ++i) {
        const auto [k, b] = model.sample_isotope_scatter(rng);
        sum = sum + k;
        longitudinal += b == Branch::Longitudinal;
    }
    CHECK((sum * (1.0 / n)).norm() < 0.002);
    const double p = si.dos_weight_L;
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(longitudinal - n * p) < 3 * sigma);
}

TEST_CASE("decay kernels are non-negative on their support") {
    const double d = 9.0 / 5.41;
    const NonlinearElastic c;
    for (int i = 1; i < 100; ++i) {
        const double x_lt = (d - 1) / (d + 1) + (1 - (d - 1) / (d + 1)) * i / 100.0;
        CHECK(decay_kernel_lt(x_lt, d) >= 0);
        const double x_tt = (d - 1) / 2 + i / 100.0;
        CHECK(decay_kernel_tt(x_tt, d, c) >= 0);
    }
}

TEST_CASE("anisotropic group velocity tracks the closed form along axes") {
    SubstrateParams si;
    si.crystal_rotation_deg = 0;
    const PhononModel model(si, true);
    const Vec3 v = model.group_velocity({0, 0, 1}, Branch::Longitudinal);
    CHECK(v.z == Approx(speed(si.c11, si.mass_density)).epsilon(1e-6));
    CHECK(std::abs(v.x) < 1e-6);
}
