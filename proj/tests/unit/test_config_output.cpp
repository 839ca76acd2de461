#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dam/config.hpp"
#include "dam/output.hpp"

using namespace dam;
using nlohmann::json;

namespace {

std::string message_of(const json& j) {
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("dam_unit_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
    const auto c = config_from_json(json::object());
    CHECK(c.sim.population.n_agents == 200);
    CHECK(c.sim.learning.r == doctest::Approx(0.1));
    CHECK(c.sim.markets.theta[0] == doctest::Approx(-0.2));
    CHECK(c.sim.bidask.mu_bid == doctest::Approx(10.5));
}

TEST_CASE("unknown keys and bad values name the field") {
    CHECK(message_of({{"learning", {{"bta", 2}}}}) == "learning.bta: unknown key");
    CHECK(message_of({{"colour", 1}}) == "colour: unknown key");
    CHECK(message_of({{"population", {{"n_agents", 1.5}}}}).rfind("population.n_agents", 0) == 0);
    CHECK(message_of({{"learning", {{"r", 0.0}}}}).find("learning.r") != std::string::npos);
    CHECK(message_of({{"markets", {{"theta", {0.1}}}}}) == "markets.theta: expected two values");
    CHECK(message_of({{"sweep", {{"r_grid", {0.1, "x"}}}}}) == "sweep.r_grid: expected an array of numbers");
}

TEST_CASE("config round-trips through JSON and hashes canonically") {
    json j{{"learning", {{"beta", 4.5}, {"r", 0.05}}},
           {"population", {{"kind", "reduced"}, {"n_agents", 80}}},
           {"sweep", {{"beta_grid", {1.0, 2.0}}}}};
    const auto c = config_from_json(j);
    const auto echo = config_to_json(c);
    const auto back = config_from_json(echo);
    CHECK(config_to_json(back) == echo);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    auto other = c;
    other.sim.learning.beta = 4.6;
    CHECK(config_hash(other) != config_hash(c));
    CHECK(reduced_params(c).beta == doctest::Approx(4.5));
    CHECK(full_params(c).beta == doctest::Approx(4.5));
}

TEST_CASE("config files accept comments") {
    const auto dir = scratch("cfg");
    std::ofstream(dir / "c.json") << "{\n  // trial\n  \"learning\": {\"beta\": 2}\n}\n";
    CHECK(load_config((dir / "c.json").string()).sim.learning.beta == doctest::Approx(2.0));
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
    std::ofstream(dir / "bad.json") << "{ \"learning\": ";
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
}

TEST_CASE("numbers and CSV rows") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CsvTable t({"a", "b", "c"});
    t.add_row({1.5, 2LL, std::string("x")});
    CHECK(t.str() == "a,b,c\n1.5,2,x\n");
    CHECK_THROWS(t.add_row({1.0}));
}

TEST_CASE("manifest lists written tables") {
    const auto dir = scratch("manifest");
    Manifest m("simulate", json{{"k", 1}}, "00ff");
    m.add_seed(7);
    m.set_generator("gen");
    m.set("note", 3);
    CsvTable t({"x"});
    t.add_row({1.0});
    t.add_row({2.0});
    m.write_table(dir, "t.csv", t);
    m.write(dir);
    std::ifstream in(dir / "manifest.json");
    const auto j = json::parse(in);
    CHECK(j["command"] == "simulate");
    CHECK(j["seeds"][0] == 7);
    CHECK(j["files"][0]["name"] == "t.csv");
    CHECK(j["files"][0]["rows"] == 2);
    CHECK(j["extra"]["note"] == 3);
    CHECK(j["schema_version"] == kSchemaVersion);
    std::stringstream csv;
    csv << std::ifstream(dir / "t.csv").rdbuf();
    CHECK(csv.str() == "x\n1\n2\n");
    for (const auto& e : std::filesystem::directory_iterator(dir))
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

namespace {

// Walks the schema alongside the default echo: same keys, same defaults.
void compare_schema(const json& schema, const json& echo, const std::string& path, int& mismatches) {
    const auto& props = schema.at("properties");
    for (const auto& [key, value] : echo.items()) {
        const std::string at = path.empty() ? key : path + "." + key;
        if (!props.contains(key)) {
            MESSAGE("schema lacks " << at);
            ++mismatches;
            continue;
        }
        const auto& sub = props.at(key);
        if (value.is_object()) compare_schema(sub, value, at, mismatches);
        else if (sub.contains("default") && sub.at("default") != value) {
            MESSAGE("default differs at " << at << ": schema " << sub.at("default") << " vs " << value);
            ++mismatches;
        }
    }
    for (const auto& [key, value] : props.items())
        if (!echo.contains(key)) {
            MESSAGE("schema documents unknown key " << (path.empty() ? key : path + "." + key));
            ++mismatches;
        }
}

}  // namespace

TEST_CASE("schema file matches the config reader") {
    std::ifstream in(CONFIG_SCHEMA);
    REQUIRE(in);
    const auto schema = json::parse(in);
    int mismatches = 0;
    compare_schema(schema, config_to_json(config_from_json(json::object())), "", mismatches);
    CHECK(mismatches == 0);
}
