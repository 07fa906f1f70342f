#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace qpsim {

struct ParityTrace {
    std::vector<std::uint8_t> samples;  // reported parity, 0 or 1
    double dt_rep = 0.01;   // s
    double gamma_p = 0;     // 1/s
    double fidelity = 1;
    std::uint64_t hidden_flips = 0;  // parity switches of the hidden process
};

ParityTrace simulate_trace(double gamma_p, double fidelity, std::size_t m = 20000, double dt_rep = 0.01,
                           std::uint64_t seed = 1);

struct Psd {
    std::vector<double> f;  // Hz, positive frequencies without DC
    std::vector<double> s;  // two-sided PSD, s
    std::size_t segments = 0;
    double dt_rep = 0;
};

// Averaged periodogram with each record split into `segments` pieces.
Psd parity_psd(std::span<const ParityTrace> traces, int segments = 8);

// S(f) = 4 F^2 G / ((2G)^2 + (2 pi f)^2) + (1 - F^2) dt
double lorentzian_psd(double f, double gamma_p, double fidelity, double dt_rep);

struct LorentzianFit {
    double gamma_p = 0;
    double fidelity = 0;
    std::array<double, 4> covariance{};  // (gamma, F) row-major
    double residual_norm = 0;
    int iterations = 0;
};

LorentzianFit fit_lorentzian(const Psd& psd);
LorentzianFit psd_and_fit(const ParityTrace& trace);
LorentzianFit psd_and_fit(std::span<const ParityTrace> traces);

struct ObservedProbabilities {
    double p_a = 0, p_b = 0, p_ab = 0;
};

struct UnderlyingProbabilities {
    double p_a = 0, p_b = 0, p_ab = 0;
    bool multiple_roots = false;
};

ObservedProbabilities coincidence_forward(double p_a, double p_b, double p_ab);
UnderlyingProbabilities coincidence_invert(double p_a_obs, double p_b_obs, double p_ab_obs);

struct CoincidenceCounts {
    std::size_t windows = 0;
    std::size_t window_samples = 0;
    std::uint64_t edges_a = 0, edges_b = 0;      // raw edge counts
    std::uint64_t windows_a = 0, windows_b = 0;  // windows holding an edge
    std::uint64_t coincidences = 0;              // windows holding edges of both
};

CoincidenceCounts coincident_edges(const ParityTrace& a, const ParityTrace& b, double window_s = 0.4);

struct CoincidenceRates {
    double window = 0.4;          // s
    double rate_a = 0, rate_b = 0, rate_ab = 0;  // observed, 1/s
    double background = 0;        // random two-fold rate, 1/s
    UnderlyingProbabilities underlying;
    bool clamped = false;  // coincidences below the random level, p_ab set to 0
};

// Per-window observed probabilities inverted to the underlying ones.
CoincidenceRates coincidence_rates(const CoincidenceCounts& c, double dt_rep);
double random_coincidence_rate(double rate_a, double rate_b, double window_s);

}  // namespace qpsim
