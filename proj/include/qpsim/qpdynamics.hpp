#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qpsim/geometry.hpp"
#include "qpsim/ledger.hpp"

namespace qpsim {

// Time in this module is in microseconds, rates in 1/us.
struct QpModelParams {
    double r = 100.0;        // recombination, 1/us (1 / 10 ns)
    double s = 0.05;         // trapping, 1/us
    double volume = 0.6;     // um^3
    double n_cp = 4.0e6;     // um^-3
    double area_scale = 20;  // simulated patch area / electrode area
    void validate() const;
};

struct PulseParams {
    double v_bias = 1.0;         // mV
    double r_normal = 6.9;       // kOhm
    double duration = 10.0;      // us
    double yield_factor = 1.673;
    void validate(double gap_ueV = 180.0) const;
    double pair_rate() const;    // broken pairs per us
};

// Per-electrode series on a uniform grid starting at t = 0.
struct SeriesGrid {
    double dt = 1.0;  // us
    std::vector<std::vector<double>> values;  // [electrode][sample]

    std::size_t n_series() const { return values.size(); }
    std::size_t n_samples() const { return values.empty() ? 0 : values.front().size(); }
};

struct XqpTrace {
    double dt = 0;       // us
    double t0 = 0;       // absolute time of sample 0, us
    std::vector<double> x;

    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    std::size_t peak_index() const;
    double peak() const { return x.empty() ? 0.0 : x[peak_index()]; }
    double at(double t) const;  // linear interpolation, 0 outside
    // Shifts the clock so that t = 0 is the end of the pulse.
    XqpTrace relative_to(double pulse_end) const;
};

// h(t) = N_qp / (area_scale n_cp V dt N_s), per us per source particle.
SeriesGrid response_function(const DepositLedger& ledger, const QpModelParams& p);

// g_i = sum_{j <= i} h_{i-j} I_ph(t_j) dt for a square injection pulse.
SeriesGrid injection_generation(const SeriesGrid& h, const PulseParams& pulse);

// g(t) = N_qp N_eh / (N_s n_cp V dt area_scale).
SeriesGrid gamma_generation(const DepositLedger& ledger, std::uint64_t n_eh_gamma, const QpModelParams& p);

// Forward Euler on dx/dt = -r x^2 - s x + g(t), g interpolated between bin centres.
XqpTrace solve_xqp(std::span<const double> g, double g_dt, const QpModelParams& p, double dt,
                   double x0 = 0.0, double t_end = -1.0);

// Full ledger-to-trace pipelines. s_per_electrode, when non-empty, replaces
// p.s electrode by electrode. t_end < 0 covers the ledger span.
std::vector<XqpTrace> injection_traces(const DepositLedger& ledger, const QpModelParams& p, const PulseParams& pulse,
                                       double dt, double t_end = -1.0,
                                       std::span<const double> s_per_electrode = {});
std::vector<XqpTrace> gamma_traces(const DepositLedger& ledger, std::uint64_t n_eh_gamma, const QpModelParams& p,
                                   double dt, double t_end = -1.0, std::span<const double> s_per_electrode = {});

// x_qp = pi dGamma / sqrt(2 Delta omega01 / hbar); dGamma in 1/us, Delta in ueV, f01 in GHz.
double xqp_from_delta_gamma1(double delta_gamma_per_us, double gap_ueV, double f01_GHz);
double delta_gamma1_from_xqp(double x, double gap_ueV, double f01_GHz);
double t1qp_from_xqp(double x, double gap_ueV, double f01_GHz);  // us
double xqp_threshold_for_t1(double t1_us, double gap_ueV, double f01_GHz);

struct FootprintSeries {
    double dt = 0;  // us
    std::vector<double> extent;  // um
    double max_extent() const;
    // First time after the maximum at which the extent returns to zero, -1 if never.
    double recovery_time() const;
};

// Extent along the y = 0 row: hull of electrodes with T1 below threshold times pitch.
FootprintSeries footprint(const std::vector<XqpTrace>& traces, const Chip& chip, double t1_threshold_us = 10.0,
                          double f01_GHz = 5.0, double gap_ueV = 180.0);

struct FitSResult {
    double s = 0;
    double residual = 0;  // RMS
};

// Scans s for the best least-squares match of the model to a measured trace.
FitSResult fit_trapping_rate(std::span<const double> g, double g_dt, const QpModelParams& base,
                             std::span<const double> t_meas, std::span<const double> x_meas, double dt,
                             double s_min = 1e-3, double s_max = 1.0);

// Time constant of an exponential tail fitted to x(t) on [t_from, t_to].
double exponential_time_constant(const XqpTrace& tr, double t_from, double t_to);

}  // namespace qpsim
