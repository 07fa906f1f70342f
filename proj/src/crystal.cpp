#include "qpsim/crystal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "qpsim/errors.hpp"
#include "qpsim/units.hpp"

namespace qpsim {

namespace {

constexpr double kFdStep = 1e-5;

Eigen::Matrix3d christoffel_matrix(const Vec3& k, const SubstrateParams& s) {
    const double c11 = s.c11, c12 = s.c12, c44 = s.c44, rho = s.mass_density;
    Eigen::Matrix3d m;
    m(0, 0) = c11 * k.x * k.x + c44 * (k.y * k.y + k.z * k.z);
    m(1, 1) = c11 * k.y * k.y + c44 * (k.x * k.x + k.z * k.z);
    m(2, 2) = c11 * k.z * k.z + c44 * (k.x * k.x + k.y * k.y);
    m(0, 1) = m(1, 0) = (c12 + c44) * k.x * k.y;
    m(0, 2) = m(2, 0) = (c12 + c44) * k.x * k.z;
    m(1, 2) = m(2, 1) = (c12 + c44) * k.y * k.z;
    // GPa / (g/cm^3) = (km/s)^2 = (um/ns)^2
    return m / rho;
}

// Ascending eigenvalues map to ST, FT, L.
constexpr int kSortedToBranch[3] = {static_cast<int>(Branch::SlowTransverse),
                                    static_cast<int>(Branch::FastTransverse),
                                    static_cast<int>(Branch::Longitudinal)};

std::array<double, 3> sorted_speeds(const Vec3& k, const SubstrateParams& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.compute(christoffel_matrix(k, s), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[kSortedToBranch[i]] = std::sqrt(std::max(ev(i), 0.0));
    return out;
}

Vec3 rotate(const Vec3& k, const Vec3& t, double angle) {
    return k * std::cos(angle) + t * std::sin(angle);
}

// v_g = v_p k + tangential gradient of v_p, by central differences.
template <class SpeedFn>
std::array<Vec3, 3> fd_group_velocity(const Vec3& k, SpeedFn speeds) {
    const Vec3 t1 = any_perpendicular(k);
    const Vec3 t2 = k.cross(t1);
    const auto v0 = speeds(k);
    const auto a1 = speeds(rotate(k, t1, kFdStep)), b1 = speeds(rotate(k, t1, -kFdStep));
    const auto a2 = speeds(rotate(k, t2, kFdStep)), b2 = speeds(rotate(k, t2, -kFdStep));
    std::array<Vec3, 3> out;
    for (int i = 0; i < 3; ++i) {
        const double d1 = (a1[i] - b1[i]) / (2 * kFdStep);
        const double d2 = (a2[i] - b2[i]) / (2 * kFdStep);
        out[i] = k * v0[i] + t1 * d1 + t2 * d2;
    }
    return out;
}

}  // namespace

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::Longitudinal: return "L";
        case Branch::SlowTransverse: return "ST";
        case Branch::FastTransverse: return "FT";
    }
    return "?";
}

DispersionSolution christoffel_solve(const Vec3& k, const SubstrateParams& s) {
    if (std::abs(k.norm() - 1.0) > 1e-9) throw InvalidInput("wavevector direction must be a unit vector");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(christoffel_matrix(k, s));
    if (es.info() != Eigen::Success) throw InvalidState("Christoffel eigen-solve failed");
    const auto& ev = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    DispersionSolution sol;
    const double scale = ev(2);
    sol.degenerate = (ev(1) - ev(0) < 1e-9 * scale) || (ev(2) - ev(1) < 1e-9 * scale);
    for (int i = 0; i < 3; ++i) {
        if (!(ev(i) > 0)) throw InvalidState("non-positive Christoffel eigenvalue");
        const int b = kSortedToBranch[i];
        sol.phase_velocity[b] = std::sqrt(ev(i));
        sol.polarization[b] = Vec3{vecs(0, i), vecs(1, i), vecs(2, i)};
    }
    sol.group_velocity = fd_group_velocity(k, [&](const Vec3& q) { return sorted_speeds(q, s); });
    return sol;
}

double isotope_scattering_rate(double nu, const SubstrateParams& s) {
    if (nu < 0) throw DomainError("frequency must be non-negative");
    const double n2 = nu * nu;
    return s.isotope_rate_B * n2 * n2 * 1e-9;
}

double anharmonic_rate(double nu, const SubstrateParams& s) {
    if (nu < 0) throw DomainError("frequency must be non-negative");
    const double n2 = nu * nu;
    return s.anharmonic_rate_A * n2 * n2 * nu * 1e-9;
}

SubstrateParams isotropic_equivalent(const SubstrateParams& s) {
    // Voigt bulk and shear moduli of a cubic crystal
    const double K = (s.c11 + 2 * s.c12) / 3.0;
    const double G = (s.c11 - s.c12 + 3 * s.c44) / 5.0;
    SubstrateParams out = s;
    out.c11 = K + 4.0 * G / 3.0;
    out.c12 = K - 2.0 * G / 3.0;
    out.c44 = G;
    return out;
}

double decay_kernel_lt(double x, double d) {
    const double a = 1.0 - x * x;
    const double b = (1 + x) * (1 + x) - d * d * (1 - x) * (1 - x);
    const double c = 1 + x * x - d * d * (1 - x) * (1 - x);
    if (x <= 0 || b < 0) return 0.0;
    return a * a * b * c * c / (x * x);
}

double decay_kernel_tt(double x, double d, const NonlinearElastic& c) {
    const double d2 = d * d;
    const double A = 0.5 * (1 - d2) * (c.beta + c.lambda + (1 + d2) * (c.gamma + c.mu));
    const double B = c.beta + c.lambda + 2 * d2 * (c.gamma + c.mu);
    const double C = c.beta + c.lambda + 2 * (c.gamma + c.mu);
    const double D = (1 - d2) * (2 * c.beta + 4 * c.gamma + c.lambda + 3 * c.mu);
    const double p = A + B * d * x - B * x * x;
    const double q = C * x * (d - x) - D / (d - x) * (x - d - (1 - d2) / (4 * x));
    return p * p + q * q;
}

PhononModel::PhononModel(const SubstrateParams& s, bool anisotropic, DecayKernel kernel)
    : sub_(s), anisotropic_(anisotropic), kernel_(kernel) {
    s.validate();
    d_ = s.v_longitudinal / s.v_transverse;
    const double th = s.crystal_rotation_deg * units::kPi / 180.0;
    cos_rot_ = std::cos(th);
    sin_rot_ = std::sin(th);
    const int n = 20000;
    const double lt_lo = (d_ - 1) / (d_ + 1), tt_lo = (d_ - 1) / 2, tt_hi = (d_ + 1) / 2;
    for (int i = 0; i <= n; ++i) {
        const double f = static_cast<double>(i) / n;
        lt_max_ = std::max(lt_max_, decay_kernel_lt(lt_lo + f * (1 - lt_lo), d_));
        tt_max_ = std::max(tt_max_, decay_kernel_tt(tt_lo + f * (tt_hi - tt_lo), d_, s.nonlinear));
    }
    lt_max_ *= 1.05;
    tt_max_ *= 1.05;
    const double hz_per_meV = units::meV_to_Hz(1.0);
    const double f4 = std::pow(hz_per_meV, 4);
    iso_coeff_ = s.isotope_rate_B * f4 * 1e-9;
    anh_coeff_ = s.anharmonic_rate_A * f4 * hz_per_meV * 1e-9;
}

Vec3 PhononModel::to_crystal(const Vec3& v) const {
    return {cos_rot_ * v.x + sin_rot_ * v.y, -sin_rot_ * v.x + cos_rot_ * v.y, v.z};
}

Vec3 PhononModel::to_lab(const Vec3& v) const {
    return {cos_rot_ * v.x - sin_rot_ * v.y, sin_rot_ * v.x + cos_rot_ * v.y, v.z};
}

std::array<double, 3> PhononModel::speeds_crystal(const Vec3& kc) const { return sorted_speeds(kc, sub_); }

double PhononModel::phase_velocity(const Vec3& k, Branch b) const {
    if (!anisotropic_) return b == Branch::Longitudinal ? sub_.v_longitudinal : sub_.v_transverse;
    return speeds_crystal(to_crystal(k))[static_cast<int>(b)];
}

Vec3 PhononModel::group_velocity(const Vec3& k, Branch b) const {
    if (!anisotropic_) return k * (b == Branch::Longitudinal ? sub_.v_longitudinal : sub_.v_transverse);
    const Vec3 kc = to_crystal(k);
    const auto g = fd_group_velocity(kc, [&](const Vec3& q) { return speeds_crystal(q); });
    return to_lab(g[static_cast<int>(b)]);
}

Branch PhononModel::sample_branch(Rng& rng) const {
    const double u = uniform01(rng);
    if (u < sub_.dos_weight_L) return Branch::Longitudinal;
    const double t = (u - sub_.dos_weight_L) / sub_.dos_weight_T;
    return t < sub_.fast_transverse_share ? Branch::FastTransverse : Branch::SlowTransverse;
}

std::pair<Vec3, Branch> PhononModel::sample_isotope_scatter(Rng& rng) const {
    Vec3 k = sample_isotropic(rng);
    return {k, sample_branch(rng)};
}

double PhononModel::isotope_rate(double e) const {
    const double e2 = e * e;
    return iso_coeff_ * e2 * e2;
}

double PhononModel::anharmonic_rate(double e, Branch b) const {
    if (b != Branch::Longitudinal) return 0.0;
    const double e2 = e * e;
    return anh_coeff_ * e2 * e2 * e;
}

namespace {

// Momentum-consistent daughter directions for |k1| = x1 |k|, |k2| = x2 |k|.
std::pair<Vec3, Vec3> split_directions(Rng& rng, const Vec3& k, double x1, double x2) {
    double c = (1.0 + x1 * x1 - x2 * x2) / (2.0 * x1);
    c = std::clamp(c, -1.0, 1.0);
    const double s = std::sqrt(1.0 - c * c);
    const double phi = 2.0 * units::kPi * uniform01(rng);
    const Vec3 t1 = any_perpendicular(k);
    const Vec3 t2 = k.cross(t1);
    const Vec3 k1 = (k * c + t1 * (s * std::cos(phi)) + t2 * (s * std::sin(phi))) * x1;
    const Vec3 k2 = k - k1;
    const double n2 = k2.norm();
    return {k1.normalized(), n2 > 1e-12 ? k2 / n2 : -k1.normalized()};
}

}  // namespace

DecayProducts PhononModel::sample_anharmonic_decay(Rng& rng, double e, const Vec3& k) const {
    const bool tt = uniform01(rng) < sub_.tt_decay_fraction;
    auto transverse = [&]() {
        return uniform01(rng) < sub_.fast_transverse_share ? Branch::FastTransverse : Branch::SlowTransverse;
    };
    if (kernel_ == DecayKernel::UniformSplit) {
        const double e1 = e * uniform01(rng);
        const Branch b1 = tt ? transverse() : Branch::Longitudinal;
        return {{e1, b1, sample_isotropic(rng)}, {e - e1, transverse(), sample_isotropic(rng)}};
    }
    if (tt) {
        const double lo = (d_ - 1) / 2, hi = (d_ + 1) / 2;
        double x;
        do {
            x = lo + (hi - lo) * uniform01(rng);
        } while (uniform01(rng) * tt_max_ > decay_kernel_tt(x, d_, sub_.nonlinear));
        const double e1 = e * x / d_;
        auto [k1, k2] = split_directions(rng, k, x, d_ - x);
        return {{e1, transverse(), k1}, {e - e1, transverse(), k2}};
    }
    const double lo = (d_ - 1) / (d_ + 1);
    double x;
    do {
        x = lo + (1 - lo) * uniform01(rng);
    } while (uniform01(rng) * lt_max_ > decay_kernel_lt(x, d_));
    const double e1 = e * x;
    auto [k1, k2] = split_directions(rng, k, x, d_ * (1 - x));
    return {{e1, Branch::Longitudinal, k1}, {e - e1, transverse(), k2}};
}

}  // namespace qpsim
