#include "qpsim/parity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <fftw3.h>

#include "qpsim/errors.hpp"
#include "qpsim/rng.hpp"
#include "qpsim/units.hpp"

namespace qpsim {

ParityTrace simulate_trace(double gamma_p, double fidelity, std::size_t m, double dt_rep, std::uint64_t seed) {
    if (m == 0) throw InvalidInput("trace length must be positive");
    if (!(gamma_p >= 0) || !(dt_rep > 0)) throw InvalidInput("rate and repetition period must be positive");
    if (!(fidelity >= 0 && fidelity <= 1)) throw InvalidInput("fidelity must lie in [0, 1]");
    if (gamma_p * dt_rep >= 10) throw InvalidInput("switching rate too fast for the repetition period");
    Rng rng = make_stream(seed, 0);
    std::poisson_distribution<std::uint64_t> flips(gamma_p * dt_rep);
    const double p_correct = 0.5 * (1.0 + fidelity);
    ParityTrace tr;
    tr.samples.resize(m);
    tr.dt_rep = dt_rep;
    tr.gamma_p = gamma_p;
    tr.fidelity = fidelity;
    std::uint8_t parity = uniform01(rng) < 0.5 ? 0 : 1;
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && gamma_p > 0) {
            const auto k = flips(rng);
            tr.hidden_flips += k;
            if (k & 1) parity ^= 1;
        }
        tr.samples[i] = uniform01(rng) < p_correct ? parity : static_cast<std::uint8_t>(parity ^ 1);
    }
    return tr;
}

Psd parity_psd(std::span<const ParityTrace> traces, int segments) {
    if (traces.empty()) throw InvalidInput("no traces supplied");
    if (segments <= 0) throw InvalidInput("segment count must be positive");
    const std::size_t m = traces.front().samples.size();
    const double dt = traces.front().dt_rep;
    for (const auto& t : traces)
        if (t.samples.size() != m || t.dt_rep != dt) throw InvalidInput("traces differ in length or period");
    if (m < 1000) throw InvalidInput("trace shorter than 1000 samples");
    const std::size_t len = m / static_cast<std::size_t>(segments);
    const std::size_t nf = len / 2 + 1;

    std::vector<double> in(len);
    fftw_complex* out = fftw_alloc_complex(nf);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in.data(), out, FFTW_ESTIMATE);
    std::vector<double> acc(nf, 0.0);
    std::size_t count = 0;
    for (const auto& t : traces) {
        for (int sgm = 0; sgm < segments; ++sgm) {
            for (std::size_t i = 0; i < len; ++i) in[i] = t.samples[sgm * len + i] ? 1.0 : -1.0;
            fftw_execute(plan);
            for (std::size_t k = 0; k < nf; ++k) acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
            ++count;
        }
    }
    fftw_destroy_plan(plan);
    fftw_free(out);

    Psd psd;
    psd.segments = count;
    psd.dt_rep = dt;
    const double norm = dt / static_cast<double>(len) / static_cast<double>(count);
    for (std::size_t k = 1; k < nf; ++k) {
        psd.f.push_back(static_cast<double>(k) / (static_cast<double>(len) * dt));
        psd.s.push_back(acc[k] * norm);
    }
    return psd;
}

double lorentzian_psd(double f, double g, double fid, double dt) {
    const double w = 2.0 * units::kPi * f;
    return 4.0 * fid * fid * g / (4.0 * g * g + w * w) + (1.0 - fid * fid) * dt;
}

namespace {

// Parameters: (log gamma, F^2). Residuals relative to the model.
struct Model {
    const Psd& psd;
    void residuals(double lg, double q, std::vector<double>& r) const {
        const double g = std::exp(lg);
        const double fid = std::sqrt(std::clamp(q, 0.0, 1.0));
        r.resize(psd.f.size());
        for (std::size_t k = 0; k < psd.f.size(); ++k) {
            const double m = lorentzian_psd(psd.f[k], g, fid, psd.dt_rep);
            r[k] = (psd.s[k] - m) / m;
        }
    }
    double cost(double lg, double q, std::vector<double>& r) const {
        residuals(lg, q, r);
        double c = 0;
        for (double v : r) c += v * v;
        return c;
    }
};

}  // namespace

LorentzianFit fit_lorentzian(const Psd& psd) {
    if (psd.f.size() < 4) throw InvalidInput("spectrum too short to fit");
    const Model model{psd};
    std::vector<double> r, r2;

    // Start from a coarse scan, the white floor sets F^2.
    const double floor = psd.s.back() / psd.dt_rep;
    double q = std::clamp(1.0 - floor, 0.01, 1.0);
    double lg = 0, best = INFINITY;
    const double g_lo = 1e-3 * psd.f.front(), g_hi = 0.5 / psd.dt_rep;
    for (int i = 0; i <= 120; ++i) {
        const double cand = std::log(g_lo) + (std::log(g_hi) - std::log(g_lo)) * i / 120.0;
        const double c = model.cost(cand, q, r);
        if (c < best) {
            best = c;
            lg = cand;
        }
    }

    double lambda = 1e-3;
    double cost = model.cost(lg, q, r);
    int it = 0;
    double jtj[2][2] = {};
    for (; it < 200; ++it) {
        // forward-difference Jacobian
        const double h0 = 1e-6, h1 = 1e-7;
        std::vector<double> ra, rb;
        model.residuals(lg + h0, q, ra);
        model.residuals(lg, q + h1, rb);
        double jtr[2] = {0, 0};
        jtj[0][0] = jtj[0][1] = jtj[1][0] = jtj[1][1] = 0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const double j0 = (ra[k] - r[k]) / h0, j1 = (rb[k] - r[k]) / h1;
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * r[k];
            jtr[1] += j1 * r[k];
        }
        jtj[1][0] = jtj[0][1];
        bool improved = false;
        for (int tries = 0; tries < 30 && !improved; ++tries) {
            const double a = jtj[0][0] * (1 + lambda), b = jtj[0][1], d = jtj[1][1] * (1 + lambda);
            const double det = a * d - b * b;
            if (!(std::abs(det) > 0)) {
                lambda *= 10;
                continue;
            }
            const double d0 = -(d * jtr[0] - b * jtr[1]) / det;
            const double d1 = -(-b * jtr[0] + a * jtr[1]) / det;
            const double nlg = lg + d0, nq = std::clamp(q + d1, 0.0, 1.0);
            const double nc = model.cost(nlg, nq, r2);
            if (nc < cost) {
                const double rel = (cost - nc) / cost;
                lg = nlg;
                q = nq;
                cost = nc;
                r.swap(r2);
                lambda = std::max(lambda / 10, 1e-12);
                improved = true;
                if (rel < 1e-12) it = 1000;
            } else {
                lambda *= 10;
            }
        }
        if (!improved) break;
    }
    model.residuals(lg, q, r);
    if (!std::isfinite(cost) || !std::isfinite(lg)) throw FitFailure("Lorentzian fit did not converge", r);

    LorentzianFit fit;
    fit.gamma_p = std::exp(lg);
    fit.fidelity = std::sqrt(std::clamp(q, 0.0, 1.0));
    fit.residual_norm = std::sqrt(cost);
    fit.iterations = std::min(it, 200);
    // Covariance of (gamma, F) from the Gauss-Newton matrix in (log gamma, F^2).
    const double dof = std::max<double>(1, static_cast<double>(r.size()) - 2);
    const double s2 = cost / dof;
    const double det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[0][1];
    if (std::abs(det) > 0) {
        const double c00 = jtj[1][1] / det * s2, c01 = -jtj[0][1] / det * s2, c11 = jtj[0][0] / det * s2;
        const double dg = fit.gamma_p;                                    // d gamma / d log gamma
        const double dfq = fit.fidelity > 0 ? 0.5 / fit.fidelity : 0.0;  // dF / d(F^2)
        fit.covariance = {dg * dg * c00, dg * dfq * c01, dg * dfq * c01, dfq * dfq * c11};
    }
    return fit;
}

LorentzianFit psd_and_fit(const ParityTrace& trace) { return fit_lorentzian(parity_psd({&trace, 1})); }

LorentzianFit psd_and_fit(std::span<const ParityTrace> traces) { return fit_lorentzian(parity_psd(traces)); }

ObservedProbabilities coincidence_forward(double pa, double pb, double pab) {
    for (double p : {pa, pb, pab})
        if (!(p >= 0 && p <= 1)) throw InvalidInput("probabilities must lie in [0, 1]");
    return {0.5 * (pab + pa), 0.5 * (pab + pb), 0.25 * (pab + pa * pb)};
}

// With x = p_AB, p_A = 2a - x and p_B = 2b - x, the third equation becomes
// x^2 + (1 - 2(a + b)) x + 4ab - 4c = 0.
UnderlyingProbabilities coincidence_invert(double a, double b, double c) {
    if (!(a >= 0 && a <= 0.5 && b >= 0 && b <= 0.5 && c >= 0 && c <= 1))
        throw Infeasible("observed probabilities outside the admissible range");
    const double B = 1.0 - 2.0 * (a + b);
    const double C = 4.0 * a * b - 4.0 * c;
    double disc = B * B - 4.0 * C;
    const double tol = 1e-12;
    if (disc < 0) {
        if (disc < -tol) throw Infeasible("no real solution for the coincidence equations");
        disc = 0;
    }
    const double sq = std::sqrt(disc);
    // numerically stable pair of roots
    const double qq = -0.5 * (B + (B >= 0 ? sq : -sq));
    double roots[2];
    if (qq != 0) {
        roots[0] = qq;
        roots[1] = C / qq;
    } else {
        roots[0] = roots[1] = 0.5 * (-B);
    }
    std::sort(roots, roots + 2);
    UnderlyingProbabilities best;
    int feasible = 0;
    for (double x : roots) {
        const double pa = 2 * a - x, pb = 2 * b - x;
        auto ok = [&](double p) { return p >= -tol && p <= 1 + tol; };
        if (ok(x) && ok(pa) && ok(pb)) {
            if (feasible == 0) best = {std::clamp(pa, 0.0, 1.0), std::clamp(pb, 0.0, 1.0), std::clamp(x, 0.0, 1.0)};
            ++feasible;
        }
    }
    if (feasible == 0) throw Infeasible("no root of the coincidence equations lies in [0, 1]");
    best.multiple_roots = feasible > 1 && std::abs(roots[1] - roots[0]) > tol;
    return best;
}

CoincidenceCounts coincident_edges(const ParityTrace& a, const ParityTrace& b, double window_s) {
    if (a.samples.size() != b.samples.size() || a.dt_rep != b.dt_rep)
        throw InvalidInput("traces must have equal length and repetition period");
    if (!(window_s > 0)) throw InvalidInput("window must be positive");
    CoincidenceCounts c;
    c.window_samples = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window_s / a.dt_rep)));
    const std::size_t n = a.samples.size();
    c.windows = n / c.window_samples;
    for (std::size_t w = 0; w < c.windows; ++w) {
        bool ea = false, eb = false;
        for (std::size_t i = w * c.window_samples; i < (w + 1) * c.window_samples; ++i) {
            if (i == 0) continue;
            if (a.samples[i] != a.samples[i - 1]) {
                ++c.edges_a;
                ea = true;
            }
            if (b.samples[i] != b.samples[i - 1]) {
                ++c.edges_b;
                eb = true;
            }
        }
        c.windows_a += ea;
        c.windows_b += eb;
        c.coincidences += ea && eb;
    }
    return c;
}

double random_coincidence_rate(double ra, double rb, double w) { return (ra * w) * (rb * w) / w; }

CoincidenceRates coincidence_rates(const CoincidenceCounts& c, double dt_rep) {
    if (c.windows == 0) throw InvalidInput("no complete coincidence windows");
    CoincidenceRates out;
    out.window = static_cast<double>(c.window_samples) * dt_rep;
    const double total = out.window * static_cast<double>(c.windows);
    out.rate_a = static_cast<double>(c.windows_a) / total;
    out.rate_b = static_cast<double>(c.windows_b) / total;
    out.rate_ab = static_cast<double>(c.coincidences) / total;
    out.background = random_coincidence_rate(out.rate_a, out.rate_b, out.window);
    const double n = static_cast<double>(c.windows);
    const double a = std::min(0.5, c.windows_a / n), b = std::min(0.5, c.windows_b / n);
    const double ab = static_cast<double>(c.coincidences) / n;
    try {
        out.underlying = coincidence_invert(a, b, ab);
    } catch (const Infeasible&) {
        // sampling noise can put the count under the accidental level
        if (ab > a * b) throw;
        out.underlying = {2 * a, 2 * b, 0.0, false};
        out.clamped = true;
    }
    return out;
}

}  // namespace qpsim
