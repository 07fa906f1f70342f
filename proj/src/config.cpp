#include "qpsim/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "json_reader.hpp"
#include "qpsim/errors.hpp"

namespace qpsim {

using detail::JsonReader;
using nlohmann::json;

namespace {

const char* layout_name(ElectrodeLayout l) {
    switch (l) {
        case ElectrodeLayout::SixQubit: return "six-qubit";
        case ElectrodeLayout::DenseGrid: return "dense-grid";
        case ElectrodeLayout::Custom: return "custom";
    }
    return "?";
}

void read_geometry(JsonReader r, ChipGeometry& g) {
    std::string layout = "dense-grid";
    r.read("layout", layout);
    if (layout == "six-qubit") {
        g = ChipGeometry::six_qubit();
    } else if (layout == "dense-grid") {
        g = ChipGeometry::dense_grid();
    } else if (layout == "custom") {
        g = ChipGeometry{};
        g.layout = ElectrodeLayout::Custom;
        g.electrodes.clear();
    } else {
        r.problems().push_back(r.sub("layout") + ": expected one of six-qubit, dense-grid, custom");
    }
    r.read("extent_x_um", g.extent_x);
    r.read("extent_y_um", g.extent_y);
    r.read("thickness_um", g.thickness);
    r.read("electrode_patch_um", g.electrode_patch_size);
    r.read("electrode_pitch_um", g.electrode_pitch);
    r.read("grid_count", g.grid_count);
    if (const json* e = r.raw("electrodes")) {
        if (g.layout != ElectrodeLayout::Custom) {
            r.problems().push_back(r.sub("electrodes") + ": only allowed with layout custom");
        } else if (!e->is_array()) {
            r.problems().push_back(r.sub("electrodes") + ": expected an array");
        } else {
            for (std::size_t i = 0; i < e->size(); ++i) {
                JsonReader er((*e)[i], r.sub("electrodes") + "[" + std::to_string(i) + "]", r.problems());
                Electrode el;
                er.require("label", el.label);
                er.require("x_um", el.x);
                er.require("y_um", el.y);
                er.finish();
                g.electrodes.push_back(el);
            }
        }
    }
    {
        JsonReader ir = r.child("islands");
        ir.read("enabled", g.islands_enabled);
        ir.read("material", g.island_material);
        ir.read("thickness_um", g.island_thickness);
        ir.read("size_um", g.island_size);
        ir.read("gap_um", g.island_gap);
        ir.finish();
    }
    {
        JsonReader gr = r.child("groundplane");
        gr.read("enabled", g.groundplane_enabled);
        gr.read("material", g.groundplane_material);
        gr.read("thickness_nm", g.groundplane_thickness);
        gr.finish();
    }
    {
        JsonReader inj = r.child("injector");
        inj.read("x_um", g.injector_x);
        inj.read("y_um", g.injector_y);
        inj.finish();
    }
    r.finish();
    g.apply_layout();
}

void read_transport(JsonReader r, TransportSection& t, ChipGeometry& g) {
    r.read("particles", t.particles);
    r.read("seed", t.seed);
    r.read("bin_width_ns", t.config.bin_width);
    r.read("max_time_ns", t.config.max_time);
    r.read("anisotropic", t.config.anisotropic);
    r.read("kill_subthreshold", t.config.kill_subthreshold);
    r.read("bulk_scattering", t.config.bulk_scattering);
    r.read("wall_escape_probability", g.wall_escape_probability);
    r.read("workers", t.config.workers);
    r.read("chunk_size", t.config.chunk_size);
    std::string kernel = "standard";
    r.read("decay_kernel", kernel);
    if (kernel == "standard") t.config.decay_kernel = DecayKernel::Standard;
    else if (kernel == "uniform-split") t.config.decay_kernel = DecayKernel::UniformSplit;
    else r.problems().push_back(r.sub("decay_kernel") + ": expected standard or uniform-split");
    r.finish();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("config: JSON parse error: ") + e.what()});
    }
    std::vector<std::string> problems;
    RunConfig c;
    JsonReader root(j, "", problems);
    read_geometry(root.child("geometry"), c.geometry);
    {
        JsonReader m = root.child("materials");
        m.read("database", c.materials.database);
        m.read("bilayer_top_nm", c.materials.bilayer_top_nm);
        m.read("bilayer_bottom_nm", c.materials.bilayer_bottom_nm);
        m.read("electrode_thickness_nm", c.materials.electrode_thickness_nm);
        m.read("injector_energy_meV", c.materials.injector_energy_meV);
        if (const json* o = m.raw("gap_overrides_ueV")) {
            if (!o->is_object()) {
                problems.push_back("materials.gap_overrides_ueV: expected an object");
            } else {
                for (auto it = o->begin(); it != o->end(); ++it) {
                    if (!it.value().is_number())
                        problems.push_back("materials.gap_overrides_ueV." + it.key() + ": expected number");
                    else
                        c.materials.gap_overrides_ueV[it.key()] = it.value().get<double>();
                }
            }
        }
        m.finish();
    }
    read_transport(root.child("transport"), c.transport, c.geometry);
    {
        JsonReader g = root.child("gamma");
        g.read("x_um", c.gamma.position.x);
        g.read("y_um", c.gamma.position.y);
        g.read("z_um", c.gamma.position.z);
        g.read("deposit_keV", c.gamma.deposit_keV);
        g.finish();
    }
    {
        JsonReader q = root.child("qp");
        q.read("r_per_us", c.qp.params.r);
        q.read("s_per_us", c.qp.params.s);
        q.read("volume_um3", c.qp.params.volume);
        q.read("n_cp_per_um3", c.qp.params.n_cp);
        q.read("area_scale", c.qp.params.area_scale);
        q.read("dt_us", c.qp.dt_us);
        q.read("f01_GHz", c.qp.f01_GHz);
        q.read("t1_threshold_us", c.qp.t1_threshold_us);
        q.read("gap_ueV", c.qp.gap_ueV);
        if (const json* o = q.raw("s_overrides_per_us")) {
            if (!o->is_object()) {
                problems.push_back("qp.s_overrides_per_us: expected an object");
            } else {
                for (auto it = o->begin(); it != o->end(); ++it) {
                    if (!it.value().is_number())
                        problems.push_back("qp.s_overrides_per_us." + it.key() + ": expected number");
                    else
                        c.qp.s_overrides[it.key()] = it.value().get<double>();
                }
            }
        }
        q.finish();
    }
    {
        JsonReader p = root.child("pulse");
        p.read("v_bias_mV", c.pulse.v_bias);
        p.read("r_normal_kOhm", c.pulse.r_normal);
        p.read("duration_us", c.pulse.duration);
        p.read("yield_factor", c.pulse.yield_factor);
        p.finish();
    }
    {
        JsonReader k = root.child("caustics");
        k.read("bins", c.caustics.bins);
        k.read("half_width_um", c.caustics.half_width_um);
        k.finish();
    }
    root.finish();
    detail::throw_if_problems(problems);
    c.validate();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) { return from_json_text(read_text_file(path)); }

RunConfig RunConfig::load(const std::optional<std::string>& path) {
    if (path) return from_file(*path);
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) return from_file(env);
    RunConfig c;
    c.validate();
    return c;
}

void RunConfig::validate() const {
    std::vector<std::string> p;
    auto collect = [&](auto&& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            p.insert(p.end(), e.problems().begin(), e.problems().end());
        } catch (const Error& e) {
            p.emplace_back(e.what());
        }
    };
    collect([&] { geometry.validate(); });
    collect([&] { transport.config.validate(); });
    collect([&] { qp.params.validate(); });
    if (transport.particles == 0) p.push_back("transport.particles: must be positive");
    if (!(qp.dt_us > 0)) p.push_back("qp.dt_us: must be positive");
    if (!(qp.f01_GHz > 0)) p.push_back("qp.f01_GHz: must be positive");
    if (!(qp.t1_threshold_us > 0)) p.push_back("qp.t1_threshold_us: must be positive");
    if (!(qp.gap_ueV > 0)) p.push_back("qp.gap_ueV: must be positive");
    if (!(gamma.deposit_keV > 0)) p.push_back("gamma.deposit_keV: must be positive");
    const auto& g = geometry;
    if (std::abs(gamma.position.x) > 0.5 * g.extent_x || std::abs(gamma.position.y) > 0.5 * g.extent_y ||
        gamma.position.z <= 0 || gamma.position.z >= g.thickness)
        p.push_back("gamma: impact position must lie inside the substrate");
    if (!(pulse.v_bias > 0 && pulse.r_normal > 0 && pulse.duration > 0 && pulse.yield_factor > 0))
        p.push_back("pulse: all values must be positive");
    if (caustics.bins < 2) p.push_back("caustics.bins: need at least 2");
    if (!(caustics.half_width_um > 0)) p.push_back("caustics.half_width_um: must be positive");
    if (!(materials.bilayer_top_nm > 0 && materials.bilayer_bottom_nm > 0 && materials.electrode_thickness_nm > 0))
        p.push_back("materials: film thicknesses must be positive");
    if (materials.injector_energy_meV && !(*materials.injector_energy_meV > 0))
        p.push_back("materials.injector_energy_meV: must be positive");
    for (const auto& [k, v] : qp.s_overrides) {
        if (!(v > 0)) p.push_back("qp.s_overrides_per_us." + k + ": must be positive");
        bool found = false;
        for (const auto& e : geometry.electrodes) found = found || e.label == k;
        if (!found) p.push_back("qp.s_overrides_per_us." + k + ": no electrode with this label");
    }
    for (const auto& [k, v] : materials.gap_overrides_ueV)
        if (!(v > 0)) p.push_back("materials.gap_overrides_ueV." + k + ": must be positive");
    if (!p.empty()) throw ValidationError(p);
}

MaterialDatabase RunConfig::material_database() const {
    MaterialDatabase db = materials.database ? MaterialDatabase::from_file(*materials.database)
                                             : MaterialDatabase::bundled();
    for (const auto& [name, gap] : materials.gap_overrides_ueV) {
        if (!db.has_superconductor(name))
            throw ValidationError({"materials.gap_overrides_ueV." + name + ": unknown superconductor"});
        auto sc = db.superconductor(name);
        sc.gap = gap;
        sc.gap_bulk = gap;
        db.set_superconductor(sc);
    }
    return db;
}

std::vector<double> RunConfig::trapping_rates() const {
    if (qp.s_overrides.empty()) return {};
    std::vector<double> s(geometry.electrodes.size(), qp.params.s);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (auto it = qp.s_overrides.find(geometry.electrodes[i].label); it != qp.s_overrides.end()) s[i] = it->second;
    return s;
}

std::string RunConfig::to_json() const {
    json j;
    const auto& g = geometry;
    j["geometry"] = {{"layout", layout_name(g.layout)},
                     {"extent_x_um", g.extent_x},
                     {"extent_y_um", g.extent_y},
                     {"thickness_um", g.thickness},
                     {"electrode_patch_um", g.electrode_patch_size},
                     {"electrode_pitch_um", g.electrode_pitch},
                     {"grid_count", g.grid_count},
                     {"islands",
                      {{"enabled", g.islands_enabled},
                       {"material", g.island_material},
                       {"thickness_um", g.island_thickness},
                       {"size_um", g.island_size},
                       {"gap_um", g.island_gap}}},
                     {"groundplane",
                      {{"enabled", g.groundplane_enabled},
                       {"material", g.groundplane_material},
                       {"thickness_nm", g.groundplane_thickness}}},
                     {"injector", {{"x_um", g.injector_x}, {"y_um", g.injector_y}}}};
    if (g.layout == ElectrodeLayout::Custom) {
        json arr = json::array();
        for (const auto& e : g.electrodes) arr.push_back({{"label", e.label}, {"x_um", e.x}, {"y_um", e.y}});
        j["geometry"]["electrodes"] = arr;
    }
    json m = {{"bilayer_top_nm", materials.bilayer_top_nm},
              {"bilayer_bottom_nm", materials.bilayer_bottom_nm},
              {"electrode_thickness_nm", materials.electrode_thickness_nm},
              {"gap_overrides_ueV", materials.gap_overrides_ueV}};
    if (materials.database) m["database"] = *materials.database;
    if (materials.injector_energy_meV) m["injector_energy_meV"] = *materials.injector_energy_meV;
    j["materials"] = m;
    const auto& t = transport.config;
    j["transport"] = {{"particles", transport.particles},
                      {"seed", transport.seed},
                      {"bin_width_ns", t.bin_width},
                      {"max_time_ns", t.max_time},
                      {"anisotropic", t.anisotropic},
                      {"kill_subthreshold", t.kill_subthreshold},
                      {"bulk_scattering", t.bulk_scattering},
                      {"wall_escape_probability", g.wall_escape_probability},
                      {"workers", t.workers},
                      {"chunk_size", t.chunk_size},
                      {"decay_kernel", t.decay_kernel == DecayKernel::Standard ? "standard" : "uniform-split"}};
    j["gamma"] = {{"x_um", gamma.position.x},
                  {"y_um", gamma.position.y},
                  {"z_um", gamma.position.z},
                  {"deposit_keV", gamma.deposit_keV}};
    j["qp"] = {{"r_per_us", qp.params.r},         {"s_per_us", qp.params.s},
               {"volume_um3", qp.params.volume},  {"n_cp_per_um3", qp.params.n_cp},
               {"area_scale", qp.params.area_scale}, {"dt_us", qp.dt_us},
               {"f01_GHz", qp.f01_GHz},           {"t1_threshold_us", qp.t1_threshold_us},
               {"gap_ueV", qp.gap_ueV},           {"s_overrides_per_us", qp.s_overrides}};
    j["pulse"] = {{"v_bias_mV", pulse.v_bias},
                  {"r_normal_kOhm", pulse.r_normal},
                  {"duration_us", pulse.duration},
                  {"yield_factor", pulse.yield_factor}};
    j["caustics"] = {{"bins", caustics.bins}, {"half_width_um", caustics.half_width_um}};
    return j.dump(2);
}

std::uint64_t RunConfig::hash() const {
    // workers do not change results, keep them out of the hash
    RunConfig c = *this;
    c.transport.config.workers = 0;
    const std::string s = c.to_json();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_schema() {
    auto num = [](const char* unit) { return json{{"type", "number"}, {"description", unit}}; };
    auto obj = [](json props) {
        return json{{"type", "object"}, {"additionalProperties", false}, {"properties", std::move(props)}};
    };
    json s = obj({
        {"geometry",
         obj({{"layout", {{"enum", {"six-qubit", "dense-grid", "custom"}}}},
              {"extent_x_um", num("um")},
              {"extent_y_um", num("um")},
              {"thickness_um", num("um")},
              {"electrode_patch_um", num("um")},
              {"electrode_pitch_um", num("um")},
              {"grid_count", {{"type", "integer"}, {"minimum", 1}}},
              {"electrodes",
               {{"type", "array"},
                {"items", obj({{"label", {{"type", "string"}}}, {"x_um", num("um")}, {"y_um", num("um")}})}}},
              {"islands",
               obj({{"enabled", {{"type", "boolean"}}},
                    {"material", {{"type", "string"}}},
                    {"thickness_um", num("um")},
                    {"size_um", num("um")},
                    {"gap_um", num("um")}})},
              {"groundplane",
               obj({{"enabled", {{"type", "boolean"}}},
                    {"material", {{"type", "string"}}},
                    {"thickness_nm", num("nm")}})},
              {"injector", obj({{"x_um", num("um")}, {"y_um", num("um")}})}})},
        {"materials",
         obj({{"database", {{"type", "string"}}},
              {"bilayer_top_nm", num("nm")},
              {"bilayer_bottom_nm", num("nm")},
              {"electrode_thickness_nm", num("nm")},
              {"injector_energy_meV", num("meV")},
              {"gap_overrides_ueV", {{"type", "object"}, {"additionalProperties", num("ueV")}}}})},
        {"transport",
         obj({{"particles", {{"type", "integer"}, {"minimum", 1}}},
              {"seed", {{"type", "integer"}, {"minimum", 0}}},
              {"bin_width_ns", num("ns")},
              {"max_time_ns", num("ns")},
              {"anisotropic", {{"type", "boolean"}}},
              {"kill_subthreshold", {{"type", "boolean"}}},
              {"bulk_scattering", {{"type", "boolean"}}},
              {"wall_escape_probability", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
              {"workers", {{"type", "integer"}, {"minimum", 0}}},
              {"chunk_size", {{"type", "integer"}, {"minimum", 1}}},
              {"decay_kernel", {{"enum", {"standard", "uniform-split"}}}}})},
        {"gamma", obj({{"x_um", num("um")}, {"y_um", num("um")}, {"z_um", num("um")}, {"deposit_keV", num("keV")}})},
        {"qp",
         obj({{"r_per_us", num("1/us")},
              {"s_per_us", num("1/us")},
              {"volume_um3", num("um^3")},
              {"n_cp_per_um3", num("um^-3")},
              {"area_scale", num("dimensionless")},
              {"dt_us", num("us")},
              {"f01_GHz", num("GHz")},
              {"t1_threshold_us", num("us")},
              {"gap_ueV", num("ueV")},
              {"s_overrides_per_us", {{"type", "object"}, {"additionalProperties", num("1/us")}}}})},
        {"pulse",
         obj({{"v_bias_mV", num("mV")},
              {"r_normal_kOhm", num("kOhm")},
              {"duration_us", num("us")},
              {"yield_factor", num("phonons per broken pair")}})},
        {"caustics", obj({{"bins", {{"type", "integer"}, {"minimum", 2}}}, {"half_width_um", num("um")}})},
    });
    s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
    s["title"] = "qpsim run configuration";
    return s.dump(2);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw InvalidInput("read error on '" + path + "'");
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    if (ec) throw InvalidInput("cannot create directory '" + parent.string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
    out << text;
    out.close();
    if (!out) throw InvalidInput("write error on '" + path + "'");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string RunManifest::to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = seed;
    j["version"] = version;
    j["wall_clock_s"] = wall_clock_s;
    j["totals"] = json::parse(totals_json);
    j["outputs"] = outputs;
    return j.dump(2);
}

void write_manifest(const std::string& dir, const RunManifest& m) {
    write_text_file((std::filesystem::path(dir) / "manifest.json").string(), m.to_json() + "\n");
}

}  // namespace qpsim
