#include <doctest.h>

#include <cmath>
#include <vector>

#include "qpsim/errors.hpp"
#include "qpsim/qpdynamics.hpp"

using namespace qpsim;
using doctest::Approx;

namespace {

DepositLedger one_count(std::uint64_t n_src, std::size_t bins = 20) {
    DepositLedger l(1, bins, 1000, 1);
    l.record(0, 10, 1);
    l.source_size = n_src;
    return l;
}

// x(t) for constant generation G starting from zero.
double riccati(double t, double r, double s, double G) {
    const double k = std::sqrt(s * s + 4 * r * G);
    const double xp = (-s + k) / (2 * r), xm = (-s - k) / (2 * r);
    const double e = std::exp(-k * t);
    return xp * (1 - e) / (1 - (xp / xm) * e);
}

}  // namespace

TEST_CASE("response function of a single count") {
    QpModelParams p;
    const auto h = response_function(one_count(1000), p);
    REQUIRE(h.n_series() == 1);
    CHECK(h.dt == 1.0);
    CHECK(h.values[0][0] == Approx(1.0 / (20 * 4e6 * 0.6 * 1.0 * 1000)).epsilon(1e-14));
    CHECK(h.values[0][1] == 0.0);
    const auto h2 = response_function(one_count(2000), p);
    CHECK(h2.values[0][0] == Approx(0.5 * h.values[0][0]).epsilon(1e-14));
    CHECK_THROWS_AS(response_function(one_count(0), p), InvalidInput);
}

TEST_CASE("pair injection rate") {
    PulseParams pulse;
    CHECK(pulse.pair_rate() == Approx(4.52e5).epsilon(2e-3));
    CHECK_NOTHROW(pulse.validate());
    pulse.v_bias = 0.7;
    CHECK_THROWS_AS(pulse.validate(), InvalidInput);
}

TEST_CASE("short pulse reproduces the response shape") {
    SeriesGrid h;
    h.dt = 1.0;
    h.values = {{0.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0}};
    PulseParams pulse;
    pulse.duration = 0.25;
    const auto g = injection_generation(h, pulse);
    const double q = pulse.yield_factor * pulse.pair_rate() * 0.25;
    for (std::size_t i = 0; i < 8; ++i) CHECK(g.values[0][i] == Approx(h.values[0][i] * q).epsilon(1e-14));
}

TEST_CASE("generation has finite support") {
    SeriesGrid h;
    h.dt = 1.0;
    h.values = {std::vector<double>(30, 0.0)};
    for (int i = 0; i < 4; ++i) h.values[0][i] = 1.0 + i;
    PulseParams pulse;
    pulse.duration = 5.5;
    const auto g = injection_generation(h, pulse);
    for (std::size_t i = 0; i < 30; ++i) {
        if (i <= 8) CHECK(g.values[0][i] > 0);
        else CHECK(g.values[0][i] == 0.0);
    }
    // partial last bin
    const double rate = pulse.yield_factor * pulse.pair_rate();
    CHECK(g.values[0][0] == Approx(rate * 1.0));
    CHECK(g.values[0][8] == Approx(4.0 * rate * 0.5));
}

TEST_CASE("gamma generation is linear in N_eh") {
    QpModelParams p;
    const auto l = one_count(10);
    const auto a = gamma_generation(l, 1000, p);
    const auto b = gamma_generation(l, 2000, p);
    CHECK(b.values[0][0] == Approx(2 * a.values[0][0]).epsilon(1e-14));
    CHECK(a.values[0][0] == Approx(1000.0 / (10 * 4e6 * 0.6 * 20)).epsilon(1e-14));
}

TEST_CASE("Euler solver against closed forms") {
    QpModelParams p;
    const std::vector<double> g(2000, 1e-6);
    SUBCASE("trapping only") {
        p.r = 0;
        const auto tr = solve_xqp(g, 1.0, p, 0.1, 0.0, 1000);
        CHECK(tr.x.back() == Approx(1e-6 / p.s).epsilon(1e-6));
    }
    SUBCASE("recombination and trapping") {
        const auto tr = solve_xqp(g, 1.0, p, 1e-3, 0.0, 200);
        for (double t : {5.0, 20.0, 60.0, 200.0}) {
            const auto i = static_cast<std::size_t>(std::llround(t / 1e-3));
            CHECK(std::abs(tr.x[i] / riccati(t, p.r, p.s, 1e-6) - 1) < 1e-4);
        }
    }
    SUBCASE("decay time with r = 0") {
        p.r = 0;
        const std::vector<double> none(1, 0.0);
        const auto tr = solve_xqp(none, 1.0, p, 0.01, 1e-5, 100);
        CHECK(exponential_time_constant(tr, 0, 100) == Approx(1 / p.s).epsilon(1e-3));
    }
}

TEST_CASE("step halving changes the peak by under 0.1%") {
    SeriesGrid h;
    h.dt = 1.0;
    h.values = {std::vector<double>(200, 0.0)};
    for (int i = 0; i < 100; ++i) h.values[0][i] = 1e-12 * std::exp(-i / 30.0);
    PulseParams pulse;
    const auto g = injection_generation(h, pulse);
    QpModelParams p;
    const auto a = solve_xqp(g.values[0], 1.0, p, 0.1);
    const auto b = solve_xqp(g.values[0], 1.0, p, 0.05);
    CHECK(a.peak() > 0);
    CHECK(std::abs(a.peak() / b.peak() - 1) < 1e-3);
}

TEST_CASE("x_qp and T1 conversions") {
    for (double x : {1e-8, 3.3e-6, 1e-4, 0.02}) {
        const double back = xqp_from_delta_gamma1(delta_gamma1_from_xqp(x, 180, 5), 180, 5);
        CHECK(std::abs(back / x - 1) < 1e-12);
    }
    // 2 Delta omega / hbar with Delta = 180 ueV, f = 5 GHz
    const double root = std::sqrt(2 * 180e-6 * 2 * M_PI * 5e9 / 6.582119569e-16);
    CHECK(t1qp_from_xqp(1e-6, 180, 5) == Approx(M_PI / (1e-6 * root) * 1e6).epsilon(1e-9));
    CHECK(xqp_threshold_for_t1(10, 180, 5) == Approx(2.397e-6).epsilon(1e-3));
    CHECK(t1qp_from_xqp(xqp_threshold_for_t1(10, 180, 5), 180, 5) == Approx(10).epsilon(1e-12));
    CHECK_THROWS_AS(t1qp_from_xqp(0, 180, 5), InvalidInput);
}

TEST_CASE("recombination and trapping cross at s / r") {
    QpModelParams p;
    const double x = p.s / p.r;
    CHECK(x == Approx(5e-4));
    CHECK(p.r * x * x == Approx(p.s * x).epsilon(1e-14));
    const std::vector<double> none(1, 0.0);
    // well above the crossover the decay is close to 1 / (r t)
    const auto hi = solve_xqp(none, 1.0, p, 1e-3, 10 * x, 1);
    CHECK(hi.x.back() == Approx(10 * x / (1 + p.r * 10 * x)).epsilon(0.05));
    CHECK(hi.x.back() < 10 * x * std::exp(-p.s));
    // well below it the decay is exponential at rate s
    const auto lo = solve_xqp(none, 1.0, p, 1e-3, 0.01 * x, 10);
    CHECK(lo.x.back() == Approx(0.01 * x * std::exp(-p.s * 10)).epsilon(0.01));
}

TEST_CASE("footprint") {
    ChipGeometry g = ChipGeometry::dense_grid(5, 200);
    const Chip chip(g);
    const auto row = chip.centre_row();
    REQUIRE(row.size() == 5u);
    std::vector<XqpTrace> traces(chip.electrode_count());
    for (auto& t : traces) {
        t.dt = 1;
        t.x.assign(10, 0.0);
    }
    SUBCASE("nothing above threshold") {
        const auto fp = footprint(traces, chip);
        CHECK(fp.max_extent() == 0.0);
        CHECK(fp.recovery_time() == 0.0);
    }
    SUBCASE("three central electrodes") {
        for (int e : row)
            if (std::abs(g.electrodes[e].x) < 250)
                for (std::size_t i = 2; i < 6; ++i) traces[e].x[i] = 1e-5;
        // off-row electrodes do not count
        traces[0].x.assign(10, 1.0);
        const auto fp = footprint(traces, chip);
        CHECK(fp.max_extent() == Approx(600));
        CHECK(fp.extent[1] == 0.0);
        CHECK(fp.recovery_time() == Approx(6.0));
    }
}

TEST_CASE("trapping rate fit recovers s") {
    QpModelParams p;
    p.s = 0.08;
    std::vector<double> g(300, 0.0);
    for (int i = 0; i < 20; ++i) g[i] = 2e-7;
    const auto truth = solve_xqp(g, 1.0, p, 0.1);
    std::vector<double> t, x;
    for (double tt = 1; tt < 280; tt += 3) {
        t.push_back(tt);
        x.push_back(truth.at(tt));
    }
    const auto fit = fit_trapping_rate(g, 1.0, p, t, x, 0.1);
    CHECK(fit.s == Approx(0.08).epsilon(0.01));
    CHECK(fit.residual < 1e-3 * truth.peak());
    CHECK_THROWS_AS(fit_trapping_rate(g, 1.0, p, {}, {}, 0.1), InvalidInput);
}

TEST_CASE("per-electrode trapping rates") {
    DepositLedger l(2, 50, 1000, 1);
    l.record(0, 10, 5);
    l.record(1, 10, 5);
    l.source_size = 1;
    QpModelParams p;
    PulseParams pulse;
    const std::vector<double> s{0.05, 0.5};
    const auto tr = injection_traces(l, p, pulse, 0.1, -1, s);
    CHECK(tr[0].peak() > tr[1].peak());
    const std::vector<double> bad{0.1};
    CHECK_THROWS_AS(injection_traces(l, p, pulse, 0.1, -1, bad), InvalidInput);
}
