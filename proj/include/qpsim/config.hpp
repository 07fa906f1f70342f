#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpsim/geometry.hpp"
#include "qpsim/materials.hpp"
#include "qpsim/qpdynamics.hpp"
#include "qpsim/transport.hpp"

namespace qpsim {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "QPSIM_CONFIG";

struct MaterialsSection {
    std::optional<std::string> database;  // JSON file replacing the bundled set
    double bilayer_top_nm = 40, bilayer_bottom_nm = 80;
    double electrode_thickness_nm = 120;
    std::optional<double> injector_energy_meV;
    std::map<std::string, double> gap_overrides_ueV;
};

struct TransportSection {
    std::uint64_t particles = 100000;
    std::uint64_t seed = 1;
    TransportConfig config;
};

struct GammaSection {
    Vec3 position{0, 0, 262.5};  // um
    double deposit_keV = 100;
};

struct QpSection {
    QpModelParams params;
    double dt_us = 0.1;
    double f01_GHz = 5.0;
    double t1_threshold_us = 10.0;
    double gap_ueV = 180.0;  // gap used for the T1 conversion
    std::map<std::string, double> s_overrides;  // electrode label -> s, 1/us
};

struct CausticSection {
    int bins = 24;
    double half_width_um = 1500;
};

struct RunConfig {
    ChipGeometry geometry = ChipGeometry::dense_grid();
    MaterialsSection materials;
    TransportSection transport;
    GammaSection gamma;
    QpSection qp;
    PulseParams pulse;
    CausticSection caustics;

    // Every problem is reported with its key path; unknown keys are rejected.
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    // Explicit path, else $QPSIM_CONFIG, else defaults.
    static RunConfig load(const std::optional<std::string>& path);

    std::string to_json() const;  // normalized, sorted keys
    std::uint64_t hash() const;
    void validate() const;

    MaterialDatabase material_database() const;
    // Trapping rate per electrode of geometry, overrides applied; empty when none are set.
    std::vector<double> trapping_rates() const;
};

// JSON schema (draft 2020-12) for the config format.
std::string config_schema();

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

struct RunManifest {
    std::string subcommand;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version;
    double wall_clock_s = 0;
    std::string totals_json = "{}";  // subcommand-specific totals
    std::vector<std::string> outputs;

    std::string to_json() const;
};

// Writes manifest.json into dir; the only manifest in that directory.
void write_manifest(const std::string& dir, const RunManifest& m);

std::string hex64(std::uint64_t v);

}  // namespace qpsim
