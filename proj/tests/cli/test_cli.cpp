// Drives the dam executable end to end: exit codes, determinism, CSV
// headers against golden files and the manifest round-trip.
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
}

int run(const std::string& args) {
    const std::string cmd = std::string(DAM_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

fs::path fresh(const std::string& name) {
    auto p = fs::temp_directory_path() / ("dam_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

void check_header(const fs::path& dir, const std::string& file) {
    const auto golden = first_line(fs::path(GOLDEN_DIR) / (file + ".header"));
    check(!golden.empty() && first_line(dir / file) == golden, "header of " + file);
}

}  // namespace

int main() {
    const auto work = fresh("work");
    const auto small = work / "small.json";
    write(small, R"({"population": {"n_agents": 30}, "simulation": {"n_periods": 120, "burn_in": 100},
                    "ensemble": {"window": 10}, "learning": {"beta": 3.0}})");
    const auto small_reduced = work / "small_reduced.json";
    write(small_reduced, R"({"population": {"n_agents": 30, "kind": "reduced"},
                            "simulation": {"n_periods": 120, "burn_in": 100}, "ensemble": {"window": 10}})");

    check(run("--help") == 0, "--help exits 0");
    check(run("") == 2, "no subcommand exits 2");
    check(run("frobnicate") == 2, "unknown subcommand exits 2");
    check(run("simulate --runs 0 --out " + (work / "x").string()) == 2, "--runs 0 exits 2");
    check(run("fp --r 2 --out " + (work / "x").string()) == 2, "out-of-range r exits 2");
    check(run("simulate --config /nonexistent.json") == 2, "missing config exits 2");

    const auto typo = work / "typo.json";
    write(typo, R"({"learning": {"bta": 2}})");
    {
        const std::string cmd = std::string(DAM_BINARY) + " analyze nash --config " + typo.string() + " --out " +
                                (work / "t").string() + " 2>&1";
        std::string out;
        if (FILE* pipe = popen(cmd.c_str(), "r")) {
            char buf[256];
            while (fgets(buf, sizeof buf, pipe)) out += buf;
            const int status = pclose(pipe);
            check(WIFEXITED(status) && WEXITSTATUS(status) == 2, "unknown config key exits 2");
        }
        check(out.find("learning.bta") != std::string::npos, "config error names the field");
    }

    const auto stall = work / "stall.json";
    write(stall, R"({"learning": {"beta": 6.0}, "fp": {"max_iter": 2, "newton_fallback": false}})");
    check(run("fp --config " + stall.string() + " --out " + (work / "stall").string()) == 3,
          "non-converged fp exits 3");
    check(fs::exists(work / "stall" / "trace.csv"), "non-converged fp still writes its trace");

    // Determinism: the same seed gives byte-identical output.
    const auto a = work / "a", b = work / "b", c = work / "c";
    check(run("simulate --config " + small.string() + " --runs 2 --seed 9 --out " + a.string()) == 0, "simulate runs");
    check(run("simulate --config " + small.string() + " --runs 2 --seed 9 --out " + b.string()) == 0, "simulate reruns");
    check(run("simulate --config " + small.string() + " --runs 2 --seed 10 --out " + c.string()) == 0, "simulate other seed");
    check(slurp(a / "attraction_samples.csv") == slurp(b / "attraction_samples.csv"), "same seed, same samples");
    check(slurp(a / "returns.csv") == slurp(b / "returns.csv"), "same seed, same returns");
    check(slurp(a / "attraction_samples.csv") != slurp(c / "attraction_samples.csv"), "other seed, other samples");
    check_header(a, "attraction_samples.csv");
    check_header(a, "returns.csv");

    const auto red = work / "red";
    check(run("simulate --config " + small_reduced.string() + " --out " + red.string()) == 0, "reduced simulate runs");
    {
        const auto golden = first_line(fs::path(GOLDEN_DIR) / "attraction_samples_reduced.csv.header");
        check(first_line(red / "attraction_samples.csv") == golden, "header of reduced attraction_samples.csv");
    }

    // Manifest: the echoed config reproduces the hash.
    json manifest = json::parse(slurp(a / "manifest.json"));
    check(manifest["command"] == "simulate", "manifest names the command");
    check(manifest["files"].size() == 2, "manifest lists both tables");
    check(manifest["seeds"].size() == 3 && manifest["seeds"][0] == 9, "manifest records the base and run seeds");
    const auto echo = work / "echo.json";
    write(echo, manifest["config"].dump());
    const auto d = work / "d";
    check(run("simulate --config " + echo.string() + " --runs 2 --seed 9 --out " + d.string()) == 0, "echoed config runs");
    const json again = json::parse(slurp(d / "manifest.json"));
    check(again["config_hash"] == manifest["config_hash"], "echoed config keeps the hash");
    check(slurp(d / "attraction_samples.csv") == slurp(a / "attraction_samples.csv"), "echoed config reproduces the run");

    const auto fp = work / "fp";
    check(run("fp --beta 2.222 --out " + fp.string()) == 0, "fp converges at beta 2.222");
    for (const char* f : {"trace.csv", "density.csv", "state.csv"}) check_header(fp, f);

    // Starts on the mirror-invariant line D1 D2 = 1 stay on it; an off-line
    // start selects one of the coexisting weakly segregated states.
    const auto sym = work / "sym", off = work / "off";
    check(run("fp --beta 10 --r 0.02 --init-d 1,1 --out " + sym.string()) == 0, "fp from D = (1, 1)");
    check(run("fp --beta 10 --r 0.02 --init-d 4,1 --out " + off.string()) == 0, "fp from D = (4, 1)");
    check(slurp(sym / "state.csv") != slurp(off / "state.csv"), "starting point selects the solution");
    {
        std::istringstream row(slurp(sym / "state.csv").substr(first_line(sym / "state.csv").size() + 1));
        std::string cell;
        std::vector<double> v;
        while (v.size() < 5 && std::getline(row, cell, ',')) v.push_back(std::stod(cell));
        check(v.size() == 5 && std::abs(v[3] * v[4] - 1.0) < 1e-6, "symmetric start keeps D1 D2 = 1");
    }

    const auto an = work / "an";
    check(run("analyze nash --out " + an.string()) == 0, "analyze nash");
    check_header(an, "nash.csv");
    check(run("analyze threshold --model reduced --out " + an.string()) == 0, "analyze threshold");
    check_header(an, "threshold.csv");
    const auto cen = work / "census.json";
    write(cen, R"({"census": {"grid_points": 11}, "sweep": {"beta_grid": [1.0, 10.0], "r_grid": [0.1]}})");
    check(run("analyze census --phase --config " + cen.string() + " --out " + an.string()) == 0, "analyze census");
    for (const char* f : {"phase_cells.csv", "phase_boundaries.csv"}) check_header(an, f);
    check(run("analyze census --beta 10 --r 0.1 --config " + cen.string() + " --out " + an.string()) == 0,
          "analyze census at one point");
    check_header(an, "census.csv");
    const auto ret = work / "returns.json";
    write(ret, R"({"sweep": {"beta_grid": [1.0, 2.0], "r_grid": [0.1]}})");
    check(run("analyze returns --config " + ret.string() + " --out " + an.string()) == 0, "analyze returns");
    check_header(an, "returns_curve.csv");
    const auto ac = work / "autocov.json";
    write(ac, R"({"population": {"n_agents": 20}, "simulation": {"n_periods": 300, "burn_in": 100},
                 "sweep": {"max_lag": 50, "lag_count": 8}})");
    check(run("analyze autocov --config " + ac.string() + " --out " + an.string()) == 0, "analyze autocov");
    check_header(an, "autocov.csv");
    check_header(an, "persistence.csv");

    std::cout << (failures ? "cli tests failed: " + std::to_string(failures) : std::string("cli tests passed")) << "\n";
    return failures ? 1 : 0;
}
