#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "qpsim/units.hpp"
#include "qpsim/vec3.hpp"

namespace qpsim {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to turn (master seed, stream id) into a seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for particle `stream_id` of a run seeded with `master_seed`.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL)));
}

// Uniform on [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform on (0, 1].
inline double uniform_open0(Rng& rng) { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; }

inline double sample_exponential(Rng& rng, double rate) { return -std::log(uniform_open0(rng)) / rate; }

inline Vec3 sample_isotropic(Rng& rng) {
    double cz = 2.0 * uniform01(rng) - 1.0;
    double phi = 2.0 * units::kPi * uniform01(rng);
    double s = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    return {s * std::cos(phi), s * std::sin(phi), cz};
}

// Lambertian direction about unit normal n.
inline Vec3 sample_cosine_hemisphere(Rng& rng, const Vec3& n) {
    double u = uniform01(rng);
    double phi = 2.0 * units::kPi * uniform01(rng);
    double ct = std::sqrt(1.0 - u);
    double st = std::sqrt(u);
    Vec3 t1 = any_perpendicular(n);
    Vec3 t2 = n.cross(t1);
    return n * ct + t1 * (st * std::cos(phi)) + t2 * (st * std::sin(phi));
}

// Uniform over the hemisphere about n.
inline Vec3 sample_uniform_hemisphere(Rng& rng, const Vec3& n) {
    Vec3 v = sample_isotropic(rng);
    return v.dot(n) < 0 ? -v : v;
}

}  // namespace qpsim
