#include <doctest.h>

#include <cmath>

#include "qpsim/errors.hpp"
#include "qpsim/geometry.hpp"
#include "qpsim/rng.hpp"

using namespace qpsim;
using doctest::Approx;

namespace {
ChipGeometry with_islands() {
    ChipGeometry g = ChipGeometry::dense_grid();
    g.islands_enabled = true;
    g.island_material = "Cu";
    g.island_thickness = 10;
    return g;
}
}  // namespace

TEST_CASE("straight down from the centre") {
    const Chip chip(ChipGeometry::dense_grid());
    const auto hit = chip.ray_to_boundary({0, 0, 262.5}, {0, 0, -4.2});
    CHECK(hit.face == Face::Bottom);
    CHECK(hit.flight_time == Approx(262.5 / 4.2));
    CHECK(hit.point.z == 0.0);
}

TEST_CASE("straight up under an electrode") {
    const Chip chip(ChipGeometry::dense_grid());
    const auto& el = chip.geometry().electrodes;
    for (int idx : {0, 100, 760, 1520}) {
        const auto hit = chip.ray_to_boundary({el[idx].x, el[idx].y, 524.0}, {0, 0, 1});
        CHECK(hit.face == Face::Top);
        CHECK(hit.region.kind == RegionKind::ElectrodePatch);
        CHECK(hit.region.electrode == idx);
    }
    const auto off = chip.ray_to_boundary({el[0].x + 100, el[0].y, 10}, {0, 0, 1});
    CHECK(off.region.kind == RegionKind::GroundPlane);
}

TEST_CASE("random rays land on the boundary") {
    const Chip chip(ChipGeometry::dense_grid());
    Rng rng = make_stream(11, 0);
    int bad = 0;
    for (int i = 0; i < 1000000; ++i) {
        const Vec3 p{-4000 + 8000 * uniform01(rng), -4000 + 8000 * uniform01(rng), 525 * uniform01(rng)};
        const Vec3 v = sample_isotropic(rng) * (1 + 8 * uniform01(rng));
        const auto h = chip.ray_to_boundary(p, v);
        const Vec3 q = h.point;
        double dist = 0;
        switch (h.face) {
            case Face::Top: dist = std::abs(q.z - 525); break;
            case Face::Bottom: dist = std::abs(q.z); break;
            case Face::WallXMin: dist = std::abs(q.x + 4000); break;
            case Face::WallXMax: dist = std::abs(q.x - 4000); break;
            case Face::WallYMin: dist = std::abs(q.y + 4000); break;
            case Face::WallYMax: dist = std::abs(q.y - 4000); break;
        }
        const Vec3 expect = p + v * h.flight_time;
        if (dist > 1e-6 || (expect - q).norm() > 1e-6 || h.flight_time < 0 || !chip.contains(q, 1e-6)) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("ray origin outside the chip is an invalid state") {
    const Chip chip(ChipGeometry::dense_grid());
    CHECK_THROWS_AS(chip.ray_to_boundary({0, 0, 600}, {0, 0, -1}), InvalidState);
    CHECK_THROWS_AS(chip.ray_to_boundary({0, 0, 100}, {0, 0, 0}), InvalidInput);
}

TEST_CASE("island lattice") {
    const Chip chip(with_islands());
    CHECK(chip.island_coverage() == Approx(0.64));
    Rng rng = make_stream(12, 0);
    int hits = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i)
        hits += chip.classify_backside(-4000 + 8000 * uniform01(rng), -4000 + 8000 * uniform01(rng)) ==
                RegionKind::Island;
    CHECK(std::abs(static_cast<double>(hits) / n - 0.64) < 0.002);
    for (int i = 0; i < 32; ++i) {
        const double c = -4000 + 125 + 250 * i;
        CHECK(chip.classify_backside(c, c) == RegionKind::Island);
        CHECK(chip.classify_backside(c, -c) == RegionKind::Island);
        const double corner = -4000 + 250 * i;
        CHECK(chip.classify_backside(corner, corner) == RegionKind::BareSi);
    }
    const Chip bare(ChipGeometry::dense_grid());
    CHECK(bare.classify_backside(-4000 + 125, -4000 + 125) == RegionKind::BareSi);
}

TEST_CASE("classification is deterministic") {
    const Chip chip(with_islands());
    Rng rng = make_stream(13, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = -4000 + 8000 * uniform01(rng), y = -4000 + 8000 * uniform01(rng);
        const auto a = chip.classify(Face::Top, x, y), b = chip.classify(Face::Top, x, y);
        CHECK(a.kind == b.kind);
        CHECK(a.electrode == b.electrode);
        CHECK(chip.classify_backside(x, y) == chip.classify_backside(x, y));
    }
}

TEST_CASE("dense grid and six-qubit layouts") {
    const Chip dense(ChipGeometry::dense_grid());
    CHECK(dense.electrode_count() == 39u * 39u);
    CHECK(dense.electrode_area_fraction() == Approx(0.002).epsilon(0.2));
    CHECK(dense.centre_row().size() == 39u);
    const Chip six(ChipGeometry::six_qubit());
    CHECK(six.electrode_count() == 6u);
    CHECK(six.geometry().injector_x == 3000);
    CHECK(six.centre_row().size() == 6u);
    CHECK(dense.hash() != six.hash());
    CHECK(Chip(ChipGeometry::dense_grid()).hash() == dense.hash());
}

TEST_CASE("validation rejects an injector outside the chip") {
    ChipGeometry g = ChipGeometry::six_qubit();
    g.injector_x = 5000;
    CHECK_THROWS_AS(g.validate(), ValidationError);
    ChipGeometry h = ChipGeometry::dense_grid();
    h.islands_enabled = true;
    CHECK_THROWS_AS(h.validate(), ValidationError);
}

TEST_CASE("overlapping electrodes are rejected") {
    ChipGeometry g = ChipGeometry::dense_grid();
    g.layout = ElectrodeLayout::Custom;
    g.electrodes = {{"a", 0, 0}, {"b", 5, 0}};
    CHECK_THROWS(Chip{g});
}
