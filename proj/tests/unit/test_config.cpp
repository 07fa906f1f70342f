#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "qpsim/config.hpp"
#include "qpsim/errors.hpp"

using namespace qpsim;

namespace {
bool has_problem(const ValidationError& e, const std::string& needle) {
    for (const auto& p : e.problems())
        if (p.find(needle) != std::string::npos) return true;
    return false;
}
}  // namespace

TEST_CASE("defaults validate") {
    const RunConfig c = RunConfig::from_json_text("{}");
    CHECK_NOTHROW(c.validate());
    CHECK(c.geometry.electrodes.size() == 1521u);
    CHECK(c.transport.particles == 100000u);
}

TEST_CASE("unknown keys are reported with their paths") {
    try {
        RunConfig::from_json_text(R"({"geometry": {"islands": {"colour": 1}}, "bogus": 2, "qp": {"dt_us": "x"}})");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(has_problem(e, "geometry.islands.colour"));
        CHECK(has_problem(e, "bogus"));
        CHECK(has_problem(e, "qp.dt_us"));
        CHECK(e.problems().size() >= 3u);
    }
}

TEST_CASE("zero particles is rejected") {
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"transport": {"particles": 0}})").validate(), ValidationError);
    CHECK_THROWS_AS(RunConfig::from_json_text("[1, 2]"), ValidationError);
    CHECK_THROWS_AS(RunConfig::from_json_text("{not json"), ValidationError);
}

TEST_CASE("round trip and hash") {
    const std::string text = R"({"geometry": {"layout": "six-qubit"}, "transport": {"particles": 5000, "seed": 9}})";
    const RunConfig a = RunConfig::from_json_text(text);
    const RunConfig b = RunConfig::from_json_text(a.to_json());
    CHECK(a.to_json() == b.to_json());
    CHECK(a.hash() == b.hash());
    RunConfig c = a;
    c.transport.config.workers = 7;
    CHECK(c.hash() == a.hash());
    c.transport.seed = 10;
    CHECK(c.hash() != a.hash());
    CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("config from the environment") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "qpsim_cfg_test";
    const std::string path = (dir / "c.json").string();
    write_text_file(path, R"({"transport": {"seed": 1234}})");
    ::setenv(kConfigEnvVar, path.c_str(), 1);
    CHECK(RunConfig::load(std::nullopt).transport.seed == 1234u);
    ::unsetenv(kConfigEnvVar);
    CHECK(RunConfig::load(std::nullopt).transport.seed == 1u);
    CHECK(RunConfig::load(path).transport.seed == 1234u);
    CHECK_THROWS_AS(RunConfig::from_file((dir / "missing.json").string()), Error);
    fs::remove_all(dir);
}

TEST_CASE("overrides") {
    const RunConfig c = RunConfig::from_json_text(
        R"({"geometry": {"layout": "six-qubit"}, "qp": {"s_overrides_per_us": {"Q2": 0.2}},
            "materials": {"gap_overrides_ueV": {"Nb": 1400}}})");
    const auto s = c.trapping_rates();
    REQUIRE(s.size() == c.geometry.electrodes.size());
    int changed = 0;
    for (std::size_t i = 0; i < s.size(); ++i) changed += s[i] == 0.2;
    CHECK(changed == 1);
    CHECK(c.material_database().superconductor("Nb").gap == doctest::Approx(1400));
    CHECK(RunConfig::from_json_text("{}").trapping_rates().empty());
}

TEST_CASE("schema is valid JSON naming each section") {
    const std::string s = config_schema();
    for (const char* k : {"geometry", "transport", "gamma", "qp", "pulse", "caustics", "materials"})
        CHECK(s.find(std::string("\"") + k + "\"") != std::string::npos);
    CHECK(s.find("2020-12") != std::string::npos);
}
