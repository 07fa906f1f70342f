#include "qpsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "qpsim/errors.hpp"

namespace qpsim {

const char* face_name(Face f) {
    switch (f) {
        case Face::Top: return "top";
        case Face::Bottom: return "bottom";
        case Face::WallXMin: return "wall_xmin";
        case Face::WallXMax: return "wall_xmax";
        case Face::WallYMin: return "wall_ymin";
        case Face::WallYMax: return "wall_ymax";
    }
    return "?";
}

const char* region_name(RegionKind r) {
    switch (r) {
        case RegionKind::GroundPlane: return "ground_plane";
        case RegionKind::ElectrodePatch: return "electrode";
        case RegionKind::BareSi: return "bare_si";
        case RegionKind::Island: return "island";
        case RegionKind::Wall: return "wall";
    }
    return "?";
}

ChipGeometry ChipGeometry::six_qubit() {
    ChipGeometry g;
    g.layout = ElectrodeLayout::SixQubit;
    g.injector_x = 3000;
    g.injector_y = 0;
    g.apply_layout();
    return g;
}

ChipGeometry ChipGeometry::dense_grid(int n, double pitch) {
    ChipGeometry g;
    g.layout = ElectrodeLayout::DenseGrid;
    g.grid_count = n;
    g.electrode_pitch = pitch;
    g.apply_layout();
    return g;
}

void ChipGeometry::apply_layout() {
    if (layout == ElectrodeLayout::SixQubit) {
        electrodes.clear();
        for (int i = 0; i < 6; ++i)
            electrodes.push_back({"Q" + std::to_string(i + 1), -3000.0 + 1000.0 * i, 0.0});
    } else if (layout == ElectrodeLayout::DenseGrid) {
        electrodes.clear();
        const double half = 0.5 * (grid_count - 1);
        for (int j = 0; j < grid_count; ++j)
            for (int i = 0; i < grid_count; ++i)
                electrodes.push_back({"E" + std::to_string(i) + "_" + std::to_string(j),
                                      (i - half) * electrode_pitch, (j - half) * electrode_pitch});
    }
}

void ChipGeometry::validate() const {
    std::vector<std::string> p;
    if (!(extent_x > 0 && extent_y > 0 && thickness > 0)) p.push_back("geometry: chip dimensions must be positive");
    if (!(electrode_patch_size > 0)) p.push_back("geometry.electrode_patch_size must be positive");
    if (!(wall_escape_probability >= 0 && wall_escape_probability <= 1))
        p.push_back("geometry.wall_escape_probability must lie in [0, 1]");
    if (std::abs(injector_x) > 0.5 * extent_x || std::abs(injector_y) > 0.5 * extent_y)
        p.push_back("geometry: injector lies outside the top face");
    const double h = 0.5 * electrode_patch_size;
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const auto& e = electrodes[i];
        if (std::abs(e.x) + h > 0.5 * extent_x || std::abs(e.y) + h > 0.5 * extent_y)
            p.push_back("geometry: electrode " + e.label + " extends beyond the top face");
    }
    if (islands_enabled) {
        if (!(island_size > 0 && island_gap >= 0)) p.push_back("geometry: island size must be positive");
        if (!(island_thickness > 0)) p.push_back("geometry.island_thickness must be positive");
        if (island_material.empty()) p.push_back("geometry.island_material required when islands are enabled");
    }
    if (groundplane_enabled && !(groundplane_thickness > 0))
        p.push_back("geometry.groundplane_thickness must be positive");
    if (!p.empty()) throw ValidationError(p);
}

namespace {

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
    }
}

void fnv_d(std::uint64_t& h, double v) { fnv(h, &v, sizeof v); }
void fnv_s(std::uint64_t& h, const std::string& s) { fnv(h, s.data(), s.size()); }

}  // namespace

Chip::Chip(ChipGeometry g) : g_(std::move(g)) {
    g_.validate();
    cell_ = std::max(100.0, 2.0 * g_.electrode_patch_size);
    nx_ = std::max(1, static_cast<int>(std::ceil(g_.extent_x / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(g_.extent_y / cell_)));
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    const double h = 0.5 * g_.electrode_patch_size;
    for (int i = 0; i < static_cast<int>(g_.electrodes.size()); ++i) {
        const auto& e = g_.electrodes[i];
        const int ix0 = std::clamp(static_cast<int>((e.x - h - xmin()) / cell_), 0, nx_ - 1);
        const int ix1 = std::clamp(static_cast<int>((e.x + h - xmin()) / cell_), 0, nx_ - 1);
        const int iy0 = std::clamp(static_cast<int>((e.y - h - ymin()) / cell_), 0, ny_ - 1);
        const int iy1 = std::clamp(static_cast<int>((e.y + h - ymin()) / cell_), 0, ny_ - 1);
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix) {
                for (int other : buckets_[iy * nx_ + ix]) {
                    const auto& o = g_.electrodes[other];
                    if (std::abs(o.x - e.x) < 2 * h && std::abs(o.y - e.y) < 2 * h)
                        throw ValidationError({"geometry: electrodes " + o.label + " and " + e.label + " overlap"});
                }
                buckets_[iy * nx_ + ix].push_back(i);
            }
    }

    hash_ = 0xcbf29ce484222325ULL;
    for (double v : {g_.extent_x, g_.extent_y, g_.thickness, g_.electrode_patch_size, g_.island_size, g_.island_gap,
                     g_.island_thickness, g_.groundplane_thickness, g_.wall_escape_probability})
        fnv_d(hash_, v);
    fnv_d(hash_, g_.islands_enabled ? 1.0 : 0.0);
    fnv_d(hash_, g_.groundplane_enabled ? 1.0 : 0.0);
    fnv_s(hash_, g_.island_material);
    fnv_s(hash_, g_.groundplane_material);
    for (const auto& e : g_.electrodes) {
        fnv_d(hash_, e.x);
        fnv_d(hash_, e.y);
    }
}

bool Chip::contains(const Vec3& p, double tol) const {
    return p.x >= xmin() - tol && p.x <= xmax() + tol && p.y >= ymin() - tol && p.y <= ymax() + tol &&
           p.z >= -tol && p.z <= g_.thickness + tol;
}

int Chip::find_electrode(double x, double y) const {
    const int ix = static_cast<int>((x - xmin()) / cell_);
    const int iy = static_cast<int>((y - ymin()) / cell_);
    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return -1;
    const double h = 0.5 * g_.electrode_patch_size;
    for (int i : buckets_[iy * nx_ + ix]) {
        const auto& e = g_.electrodes[i];
        if (std::abs(x - e.x) <= h && std::abs(y - e.y) <= h) return i;
    }
    return -1;
}

Region Chip::classify_top(double x, double y) const {
    const int e = find_electrode(x, y);
    if (e >= 0) return {RegionKind::ElectrodePatch, e};
    return {g_.groundplane_enabled ? RegionKind::GroundPlane : RegionKind::BareSi, -1};
}

RegionKind Chip::classify_backside(double x, double y) const {
    if (!g_.islands_enabled) return RegionKind::BareSi;
    const double pitch = g_.island_pitch();
    double u = std::fmod(x - xmin(), pitch);
    double v = std::fmod(y - ymin(), pitch);
    if (u < 0) u += pitch;
    if (v < 0) v += pitch;
    const double h = 0.5 * g_.island_size, c = 0.5 * pitch;
    return (std::abs(u - c) < h && std::abs(v - c) < h) ? RegionKind::Island : RegionKind::BareSi;
}

Region Chip::classify(Face f, double x, double y) const {
    switch (f) {
        case Face::Top: return classify_top(x, y);
        case Face::Bottom: return {classify_backside(x, y), -1};
        default: return {RegionKind::Wall, -1};
    }
}

Vec3 Chip::inward_normal(Face f) {
    switch (f) {
        case Face::Top: return {0, 0, -1};
        case Face::Bottom: return {0, 0, 1};
        case Face::WallXMin: return {1, 0, 0};
        case Face::WallXMax: return {-1, 0, 0};
        case Face::WallYMin: return {0, 1, 0};
        case Face::WallYMax: return {0, -1, 0};
    }
    return {0, 0, 1};
}

SurfaceHit Chip::ray_to_boundary(const Vec3& p, const Vec3& v) const {
    if (!contains(p, 1e-6)) throw InvalidState("ray origin lies outside the chip");
    if (!(v.dot(v) > 0)) throw InvalidInput("ray velocity must be non-zero");
    constexpr double inf = std::numeric_limits<double>::infinity();
    double t = inf;
    Face face = Face::Top;
    auto consider = [&](double vc, double pc, double lo, double hi, Face flo, Face fhi) {
        if (vc > 0) {
            const double tt = (hi - pc) / vc;
            if (tt < t) {
                t = tt;
                face = fhi;
            }
        } else if (vc < 0) {
            const double tt = (lo - pc) / vc;
            if (tt < t) {
                t = tt;
                face = flo;
            }
        }
    };
    consider(v.x, p.x, xmin(), xmax(), Face::WallXMin, Face::WallXMax);
    consider(v.y, p.y, ymin(), ymax(), Face::WallYMin, Face::WallYMax);
    consider(v.z, p.z, 0.0, g_.thickness, Face::Bottom, Face::Top);
    t = std::max(t, 0.0);
    Vec3 q = p + v * t;
    q.x = std::clamp(q.x, xmin(), xmax());
    q.y = std::clamp(q.y, ymin(), ymax());
    q.z = std::clamp(q.z, 0.0, g_.thickness);
    switch (face) {
        case Face::Top: q.z = g_.thickness; break;
        case Face::Bottom: q.z = 0; break;
        case Face::WallXMin: q.x = xmin(); break;
        case Face::WallXMax: q.x = xmax(); break;
        case Face::WallYMin: q.y = ymin(); break;
        case Face::WallYMax: q.y = ymax(); break;
    }
    return {face, q, classify(face, q.x, q.y), t};
}

double Chip::electrode_area_fraction() const {
    const double a = g_.electrode_patch_size * g_.electrode_patch_size;
    return static_cast<double>(g_.electrodes.size()) * a / (g_.extent_x * g_.extent_y);
}

double Chip::island_coverage() const {
    if (!g_.islands_enabled) return 0.0;
    // Exact integral of the periodic indicator over each axis.
    auto axis = [&](double extent) {
        const double pitch = g_.island_pitch();
        const double lo = 0.5 * (pitch - g_.island_size), hi = lo + g_.island_size;
        const double full = std::floor(extent / pitch);
        const double rem = extent - full * pitch;
        const double partial = std::clamp(rem, lo, hi) - lo;
        return (full * g_.island_size + partial) / extent;
    };
    return axis(g_.extent_x) * axis(g_.extent_y);
}

std::vector<int> Chip::centre_row() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(g_.electrodes.size()); ++i)
        if (std::abs(g_.electrodes[i].y) < 1e-9) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return g_.electrodes[a].x < g_.electrodes[b].x; });
    return idx;
}

}  // namespace qpsim
