#pragma once

// Internal units: length um, time ns, energy meV.

namespace qpsim::units {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kHbar_eVs = 6.582119569e-16;
inline constexpr double kHbar_meVns = kHbar_eVs * 1e3 * 1e9;  // 6.582e-4 meV*ns
inline constexpr double kPlanck_eVs = 4.135667696e-15;
inline constexpr double kBoltzmann_eVK = 8.617333262e-5;
inline constexpr double kElementaryCharge_C = 1.602176634e-19;
inline constexpr double kJoulePerEv = kElementaryCharge_C;

inline constexpr double ueV_to_meV(double v) { return v * 1e-3; }
inline constexpr double meV_to_ueV(double v) { return v * 1e3; }

// Phonon frequency nu (Hz) for energy E (meV).
inline constexpr double meV_to_Hz(double e_meV) { return e_meV * 1e-3 / kPlanck_eVs; }
inline constexpr double Hz_to_meV(double nu) { return nu * kPlanck_eVs * 1e3; }

// Angular frequency in rad/ns for energy E (meV).
inline constexpr double meV_to_rad_per_ns(double e_meV) { return e_meV / kHbar_meVns; }

inline constexpr double us_to_ns(double t) { return t * 1e3; }
inline constexpr double ns_to_us(double t) { return t * 1e-3; }

}  // namespace qpsim::units
