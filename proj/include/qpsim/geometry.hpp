#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpsim/vec3.hpp"

namespace qpsim {

enum class Face : std::uint8_t { Top, Bottom, WallXMin, WallXMax, WallYMin, WallYMax };
enum class RegionKind : std::uint8_t { GroundPlane, ElectrodePatch, BareSi, Island, Wall };
enum class ElectrodeLayout { SixQubit, DenseGrid, Custom };

const char* face_name(Face f);
const char* region_name(RegionKind r);

struct Region {
    RegionKind kind = RegionKind::BareSi;
    int electrode = -1;  // valid for ElectrodePatch
};

struct SurfaceHit {
    Face face = Face::Top;
    Vec3 point;
    Region region;
    double flight_time = 0;  // ns
};

struct Electrode {
    std::string label;
    double x = 0, y = 0;  // patch centre on the top face, um
};

// Lengths in um. The chip occupies [-X/2, X/2] x [-Y/2, Y/2] x [0, thickness];
// the device layer is the top face z = thickness.
struct ChipGeometry {
    double extent_x = 8000, extent_y = 8000, thickness = 525;
    double electrode_patch_size = 10;
    double electrode_pitch = 200;
    ElectrodeLayout layout = ElectrodeLayout::DenseGrid;
    int grid_count = 39;
    std::vector<Electrode> electrodes;

    bool islands_enabled = false;
    double island_size = 200, island_gap = 50;
    double island_thickness = 0;  // um
    std::string island_material;

    bool groundplane_enabled = true;
    std::string groundplane_material = "Nb";
    double groundplane_thickness = 150;  // nm

    double wall_escape_probability = 0.025;
    double injector_x = 0, injector_y = 0;

    // Q1..Q6 along y = 0 with the injector beyond Q6; positions are estimates.
    static ChipGeometry six_qubit();
    static ChipGeometry dense_grid(int n = 39, double pitch = 200);

    // Rebuilds the electrode list for SixQubit / DenseGrid layouts.
    void apply_layout();
    void validate() const;
    double island_pitch() const { return island_size + island_gap; }
};

class Chip {
public:
    explicit Chip(ChipGeometry g);

    const ChipGeometry& geometry() const { return g_; }
    std::size_t electrode_count() const { return g_.electrodes.size(); }

    bool contains(const Vec3& p, double tol = 1e-9) const;

    // Earliest boundary crossing along p + v t. p must be inside the box or on
    // its boundary with v pointing inward.
    SurfaceHit ray_to_boundary(const Vec3& p, const Vec3& v) const;

    Region classify_top(double x, double y) const;
    RegionKind classify_backside(double x, double y) const;
    Region classify(Face f, double x, double y) const;

    static Vec3 inward_normal(Face f);

    double electrode_area_fraction() const;
    double island_coverage() const;  // exact area fraction of the lattice
    std::uint64_t hash() const { return hash_; }

    double xmin() const { return -0.5 * g_.extent_x; }
    double xmax() const { return 0.5 * g_.extent_x; }
    double ymin() const { return -0.5 * g_.extent_y; }
    double ymax() const { return 0.5 * g_.extent_y; }

    // Electrodes lying on the row y = 0, sorted by x.
    std::vector<int> centre_row() const;

private:
    int find_electrode(double x, double y) const;

    ChipGeometry g_;
    double cell_;
    int nx_, ny_;
    std::vector<std::vector<int>> buckets_;
    std::uint64_t hash_ = 0;
};

}  // namespace qpsim
