#include "qpsim/qpdynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpsim/errors.hpp"
#include "qpsim/units.hpp"

namespace qpsim {

void QpModelParams::validate() const {
    if (!(r >= 0 && s >= 0 && volume > 0 && n_cp > 0 && area_scale > 0))
        throw InvalidInput("QP model parameters must be positive");
}

void PulseParams::validate(double gap_ueV) const {
    if (!(v_bias > 0 && r_normal > 0 && duration >= 0 && yield_factor > 0))
        throw InvalidInput("pulse parameters must be positive");
    if (v_bias * 1e3 <= 4.0 * gap_ueV)
        throw InvalidInput("bias below 4*gap; the pair-breaking yield factor does not apply");
}

double PulseParams::pair_rate() const {
    const double amps = v_bias * 1e-3 / (r_normal * 1e3);
    return amps / (2.0 * units::kElementaryCharge_C) * 1e-6;
}

std::size_t XqpTrace::peak_index() const {
    return static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
}

double XqpTrace::at(double t) const {
    if (x.empty()) return 0.0;
    const double f = (t - t0) / dt;
    if (f < 0 || f > static_cast<double>(x.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(f);
    if (i + 1 >= x.size()) return x.back();
    const double w = f - static_cast<double>(i);
    return x[i] * (1 - w) + x[i + 1] * w;
}

XqpTrace XqpTrace::relative_to(double pulse_end) const {
    XqpTrace out = *this;
    out.t0 -= pulse_end;
    return out;
}

SeriesGrid response_function(const DepositLedger& ledger, const QpModelParams& p) {
    p.validate();
    if (ledger.source_size == 0) throw InvalidInput("ledger has zero source size");
    SeriesGrid h;
    h.dt = units::ns_to_us(ledger.bin_width());
    const double norm = 1.0 / (p.area_scale * p.n_cp * p.volume * h.dt * static_cast<double>(ledger.source_size));
    h.values.resize(ledger.n_electrodes());
    for (std::size_t e = 0; e < ledger.n_electrodes(); ++e) {
        auto c = ledger.electrode_counts(e);
        h.values[e].resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) h.values[e][i] = static_cast<double>(c[i]) * norm;
    }
    return h;
}

SeriesGrid injection_generation(const SeriesGrid& h, const PulseParams& pulse) {
    if (!(pulse.duration >= 0)) throw InvalidInput("pulse duration must be non-negative");
    const double rate = pulse.yield_factor * pulse.pair_rate();
    const std::size_t n = h.n_samples();
    std::vector<double> inj(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        // fraction of bin j covered by the pulse
        const double a = h.dt * static_cast<double>(j), b = a + h.dt;
        const double cover = std::clamp(std::min(b, pulse.duration) - a, 0.0, h.dt);
        inj[j] = rate * cover;
    }
    SeriesGrid g;
    g.dt = h.dt;
    g.values.assign(h.n_series(), std::vector<double>(n, 0.0));
    for (std::size_t e = 0; e < h.n_series(); ++e) {
        const auto& he = h.values[e];
        auto& ge = g.values[e];
        for (std::size_t j = 0; j < n; ++j) {
            if (inj[j] == 0) continue;
            for (std::size_t i = j; i < n; ++i) ge[i] += he[i - j] * inj[j];
        }
    }
    return g;
}

SeriesGrid gamma_generation(const DepositLedger& ledger, std::uint64_t n_eh_gamma, const QpModelParams& p) {
    SeriesGrid g = response_function(ledger, p);
    for (auto& v : g.values)
        for (double& x : v) x *= static_cast<double>(n_eh_gamma);
    return g;
}

XqpTrace solve_xqp(std::span<const double> g, double g_dt, const QpModelParams& p, double dt, double x0,
                   double t_end) {
    p.validate();
    if (!(dt > 0)) throw InvalidInput("Euler step must be positive");
    if (!(g_dt > 0)) throw InvalidInput("generation grid step must be positive");
    if (t_end < 0) t_end = g_dt * static_cast<double>(g.size());
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    auto g_at = [&](double t) {
        if (g.empty()) return 0.0;
        const double f = t / g_dt - 0.5;
        if (f <= 0) return g.front();
        const auto i = static_cast<std::size_t>(f);
        if (i + 1 >= g.size()) return i < g.size() ? g[i] : 0.0;
        const double w = f - static_cast<double>(i);
        return g[i] * (1 - w) + g[i + 1] * w;
    };
    XqpTrace tr;
    tr.dt = dt;
    tr.x.resize(steps + 1);
    double x = x0;
    tr.x[0] = x;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = dt * static_cast<double>(n);
        x += dt * (-p.r * x * x - p.s * x + g_at(t));
        if (x < 0) x = 0;
        tr.x[n + 1] = x;
    }
    return tr;
}

namespace {

std::vector<XqpTrace> traces_from(const SeriesGrid& g, const QpModelParams& p, double dt, double t_end,
                                  std::span<const double> s_per_electrode) {
    if (!s_per_electrode.empty() && s_per_electrode.size() != g.n_series())
        throw InvalidInput("per-electrode trapping rates do not match the electrode count");
    std::vector<XqpTrace> out;
    out.reserve(g.n_series());
    for (std::size_t e = 0; e < g.n_series(); ++e) {
        QpModelParams pe = p;
        if (!s_per_electrode.empty()) pe.s = s_per_electrode[e];
        out.push_back(solve_xqp(g.values[e], g.dt, pe, dt, 0.0, t_end));
    }
    return out;
}

}  // namespace

std::vector<XqpTrace> injection_traces(const DepositLedger& ledger, const QpModelParams& p, const PulseParams& pulse,
                                       double dt, double t_end, std::span<const double> s_per_electrode) {
    return traces_from(injection_generation(response_function(ledger, p), pulse), p, dt, t_end, s_per_electrode);
}

std::vector<XqpTrace> gamma_traces(const DepositLedger& ledger, std::uint64_t n_eh_gamma, const QpModelParams& p,
                                   double dt, double t_end, std::span<const double> s_per_electrode) {
    return traces_from(gamma_generation(ledger, n_eh_gamma, p), p, dt, t_end, s_per_electrode);
}

namespace {
double conversion_root(double gap_ueV, double f01_GHz) {
    if (!(gap_ueV > 0 && f01_GHz > 0)) throw InvalidInput("gap and qubit frequency must be positive");
    const double omega = 2.0 * units::kPi * f01_GHz * 1e9;
    return std::sqrt(2.0 * gap_ueV * 1e-6 * omega / units::kHbar_eVs);  // 1/s
}
}  // namespace

double xqp_from_delta_gamma1(double dg, double gap_ueV, double f01_GHz) {
    if (!(dg >= 0)) throw InvalidInput("relaxation rate must be non-negative");
    return units::kPi * dg * 1e6 / conversion_root(gap_ueV, f01_GHz);
}

double delta_gamma1_from_xqp(double x, double gap_ueV, double f01_GHz) {
    if (!(x >= 0)) throw InvalidInput("x_qp must be non-negative");
    return x * conversion_root(gap_ueV, f01_GHz) / units::kPi * 1e-6;
}

double t1qp_from_xqp(double x, double gap_ueV, double f01_GHz) {
    if (!(x > 0)) throw InvalidInput("x_qp must be positive");
    return 1.0 / delta_gamma1_from_xqp(x, gap_ueV, f01_GHz);
}

double xqp_threshold_for_t1(double t1_us, double gap_ueV, double f01_GHz) {
    if (!(t1_us > 0)) throw InvalidInput("T1 must be positive");
    return xqp_from_delta_gamma1(1.0 / t1_us, gap_ueV, f01_GHz);
}

double FootprintSeries::max_extent() const {
    return extent.empty() ? 0.0 : *std::max_element(extent.begin(), extent.end());
}

double FootprintSeries::recovery_time() const {
    if (extent.empty()) return -1;
    const auto peak = std::max_element(extent.begin(), extent.end()) - extent.begin();
    if (extent[peak] <= 0) return 0;
    for (std::size_t i = static_cast<std::size_t>(peak); i < extent.size(); ++i)
        if (extent[i] <= 0) return dt * static_cast<double>(i);
    return -1;
}

FootprintSeries footprint(const std::vector<XqpTrace>& traces, const Chip& chip, double t1_threshold_us,
                          double f01_GHz, double gap_ueV) {
    const double x_th = xqp_threshold_for_t1(t1_threshold_us, gap_ueV, f01_GHz);
    const auto row = chip.centre_row();
    FootprintSeries fp;
    if (row.empty() || traces.empty()) return fp;
    if (traces.size() != chip.electrode_count()) throw InvalidInput("one trace per electrode is required");
    const auto& electrodes = chip.geometry().electrodes;
    const double pitch = chip.geometry().electrode_pitch;
    fp.dt = traces[row.front()].dt;
    std::size_t n = traces[row.front()].x.size();
    for (int e : row) n = std::min(n, traces[e].x.size());
    fp.extent.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int e : row) {
            if (traces[e].x[i] > x_th) {
                lo = std::min(lo, electrodes[e].x);
                hi = std::max(hi, electrodes[e].x);
            }
        }
        if (hi >= lo) fp.extent[i] = hi - lo + pitch;
    }
    return fp;
}

FitSResult fit_trapping_rate(std::span<const double> g, double g_dt, const QpModelParams& base,
                             std::span<const double> t_meas, std::span<const double> x_meas, double dt,
                             double s_min, double s_max) {
    if (t_meas.size() != x_meas.size() || t_meas.empty()) throw InvalidInput("measured trace is empty or ragged");
    if (!(s_min > 0 && s_max > s_min)) throw InvalidInput("invalid trapping-rate search range");
    const double t_end = std::max(*std::max_element(t_meas.begin(), t_meas.end()) + dt, g_dt * g.size());
    auto cost = [&](double s) {
        QpModelParams p = base;
        p.s = s;
        const XqpTrace tr = solve_xqp(g, g_dt, p, dt, 0.0, t_end);
        double sum = 0;
        for (std::size_t k = 0; k < t_meas.size(); ++k) {
            const double d = tr.at(t_meas[k]) - x_meas[k];
            sum += d * d;
        }
        return std::sqrt(sum / static_cast<double>(t_meas.size()));
    };
    const int n_grid = 41;
    const double ratio = std::pow(s_max / s_min, 1.0 / (n_grid - 1));
    std::vector<double> grid(n_grid), val(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        grid[i] = s_min * std::pow(ratio, i);
        val[i] = cost(grid[i]);
    }
    const int best = static_cast<int>(std::min_element(val.begin(), val.end()) - val.begin());
    double a = grid[std::max(0, best - 1)], b = grid[std::min(n_grid - 1, best + 1)];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = cost(c), fd = cost(d);
    while (b - a > 1e-4) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = cost(d);
        }
    }
    const double s = 0.5 * (a + b);
    return {s, cost(s)};
}

double exponential_time_constant(const XqpTrace& tr, double t_from, double t_to) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
        const double t = tr.time(i);
        if (t < t_from || t > t_to || !(tr.x[i] > 0)) continue;
        const double y = std::log(tr.x[i]);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
    }
    if (n < 3) throw FitFailure("too few positive samples for an exponential fit", {});
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (!(slope < 0)) throw FitFailure("trace does not decay on the requested window", {slope});
    return -1.0 / slope;
}

}  // namespace qpsim
