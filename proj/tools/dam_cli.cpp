// dam - command-line driver for simulations and mean-field analyses.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "dam/bifurcation.hpp"
#include "dam/config.hpp"
#include "dam/output.hpp"
#include "dam/random.hpp"
#include "dam/simulator.hpp"
#include "dam/stats.hpp"

namespace fs = std::filesystem;
using namespace dam;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;

struct Common {
    std::string config_path;
    std::string out_dir = ".";
};

RunConfig load(const Common& c) { return c.config_path.empty() ? config_from_json(nlohmann::json::object()) : load_config(c.config_path); }

Manifest manifest_for(const std::string& command, const RunConfig& config) {
    Manifest m(command, config_to_json(config), config_hash(config));
    m.set_generator(std::string(kGeneratorName));
    m.add_seed(config.sim.seed);
    return m;
}

std::string join_masses(const std::vector<double>& masses) {
    std::string out;
    for (std::size_t k = 0; k < masses.size(); ++k) out += (k ? ";" : "") + format_number(masses[k]);
    return out;
}

DemandRatios parse_ratios(const std::string& text) {
    double d1 = 0.0, d2 = 0.0;
    char comma = 0;
    std::istringstream in(text);
    if (!(in >> d1 >> comma >> d2) || comma != ',' || !(d1 > 0.0) || !(d2 > 0.0))
        throw CLI::ValidationError("--init-d", "expected two positive numbers as D1,D2");
    return {d1, d2};
}

int cmd_simulate(const Common& common, std::optional<std::uint64_t> seed, std::optional<int> runs) {
    auto config = load(common);
    if (seed) config.sim.seed = config.ensemble.base_seed = *seed;
    if (runs) config.ensemble.n_runs = *runs;
    config.validate();
    auto manifest = manifest_for("simulate", config);
    const auto result = run_ensemble(config.sim, config.ensemble);

    const int n = config.sim.population.n_agents;
    const bool full = config.sim.population.kind == ModelKind::full;
    std::vector<std::string> header{"run", "period", "agent", "type"};
    if (full) header.insert(header.end(), {"a_b1", "a_s1", "a_b2", "a_s2", "delta_bs", "delta_12"});
    else header.push_back("delta");
    CsvTable samples(header);
    const int first = config.sim.n_periods - result.window;
    const int dim = result.state_dim;
    for (std::size_t s = 0; s < result.n_samples(); ++s) {
        const auto run = static_cast<long long>(s / (static_cast<std::size_t>(n) * result.window));
        const auto period = static_cast<long long>(first + (s / n) % result.window);
        std::vector<CsvTable::Cell> row{run, period, static_cast<long long>(s % n), static_cast<long long>(result.pooled_type[s])};
        const double* a = &result.pooled_state[s * dim];
        for (int c = 0; c < dim; ++c) row.emplace_back(a[c]);
        if (full) {
            const auto pr = project({a[0], a[1], a[2], a[3]});
            row.emplace_back(pr.delta_bs);
            row.emplace_back(pr.delta_12);
        }
        samples.add_row(std::move(row));
    }
    CsvTable returns({"run", "seed", "mean_return", "trades"});
    for (int k = 0; k < result.n_runs; ++k) {
        returns.add_row({static_cast<long long>(k), std::to_string(result.run_seeds[k]), result.run_mean_return[k],
                         result.run_trades[k]});
        manifest.add_seed(result.run_seeds[k]);
    }
    manifest.set("window", result.window);
    manifest.set("mean_return", result.mean_return);
    manifest.write_table(common.out_dir, "attraction_samples.csv", samples);
    manifest.write_table(common.out_dir, "returns.csv", returns);
    manifest.write(common.out_dir);
    return 0;
}

int cmd_fp(const Common& common, std::optional<double> beta, std::optional<double> r, const std::string& init) {
    auto config = load(common);
    if (beta) config.sim.learning.beta = *beta;
    if (r) config.sim.learning.r = *r;
    config.validate();
    const DemandRatios d0 = init.empty() ? DemandRatios{} : parse_ratios(init);
    auto manifest = manifest_for("fp", config);
    const auto params = reduced_params(config);
    const auto state = solve_self_consistent(params, d0, config.fp);

    CsvTable trace({"iteration", "d1", "d2", "max_dt", "newton"});
    for (const auto& row : state.trace)
        trace.add_row({static_cast<long long>(row.iteration), row.d.d1, row.d.d2, row.max_dt, static_cast<long long>(row.newton)});
    manifest.write_table(common.out_dir, "trace.csv", trace);

    std::vector<std::string> header{"delta"};
    for (std::size_t g = 0; g < state.densities.size(); ++g) header.push_back("density_type" + std::to_string(g + 1));
    CsvTable density(header);
    const auto& grid = state.densities.front();
    for (int i = 0; i < grid.n_points(); ++i) {
        std::vector<CsvTable::Cell> row{grid.x(i)};
        for (const auto& d : state.densities) row.emplace_back(d.values[i]);
        density.add_row(std::move(row));
    }
    manifest.write_table(common.out_dir, "density.csv", density);

    CsvTable summary({"type", "beta", "r", "d1", "d2", "t_b1", "t_s1", "t_b2", "t_s2", "market1_fraction", "binder",
                      "modes", "iterations", "converged"});
    for (std::size_t g = 0; g < state.densities.size(); ++g) {
        summary.add_row({static_cast<long long>(g), params.beta, params.r, state.d.d1, state.d.d2, state.t.t[0],
                         state.t.t[1], state.t.t[2], state.t.t[3], state.market_fractions[g],
                         binder(state.densities[g]), static_cast<long long>(count_modes(state.densities[g])),
                         static_cast<long long>(state.iterations), static_cast<long long>(state.converged)});
    }
    manifest.write_table(common.out_dir, "state.csv", summary);
    manifest.set("converged", state.converged);
    manifest.set("population_return", population_return(params, state));
    manifest.write(common.out_dir);
    if (!state.converged) {
        std::cerr << "fp: self-consistent iteration did not converge; see trace.csv\n";
        return kExitNoConvergence;
    }
    return 0;
}

int cmd_threshold(const Common& common, const std::string& model) {
    const auto config = load(common);
    auto manifest = manifest_for("analyze threshold", config);
    CsvTable table({"model", "beta_s", "inv_beta_s", "beta_lo", "beta_hi", "evaluations"});
    auto add = [&](const char* name, const ThresholdResult& t) {
        table.add_row({name, t.beta_s, 1.0 / t.beta_s, t.beta_lo, t.beta_hi, static_cast<long long>(t.evaluations)});
    };
    if (model == "reduced" || model == "both")
        add("reduced", beta_s_reduced(reduced_params(config), config.threshold.beta_lo, config.threshold.beta_hi,
                                      config.threshold.tol));
    if (model == "full" || model == "both")
        add("full", beta_s_full(full_params(config), config.threshold.full_beta_lo, config.threshold.full_beta_hi,
                                config.threshold.tol));
    manifest.write_table(common.out_dir, "threshold.csv", table);
    manifest.write(common.out_dir);
    return 0;
}

int cmd_census(const Common& common, std::optional<double> beta, std::optional<double> r, bool phase) {
    auto config = load(common);
    if (beta) config.sim.learning.beta = *beta;
    if (r) config.sim.learning.r = *r;
    config.validate();
    auto manifest = manifest_for("analyze census", config);
    const auto params = reduced_params(config);
    if (phase) {
        const auto pb = phase_boundaries(params, config.sweep.r_grid, config.sweep.beta_grid, config.census,
                                         resolve_workers(config.ensemble.workers));
        CsvTable cells({"r", "beta", "n_solutions", "segregated"});
        for (const auto& c : pb.cells)
            cells.add_row({c.r, c.beta, static_cast<long long>(c.n_solutions), static_cast<long long>(c.segregated)});
        CsvTable curves({"curve", "r", "beta", "inv_beta"});
        for (const auto& [rr, b] : pb.blue) curves.add_row({"blue", rr, b, 1.0 / b});
        for (const auto& [b, rr] : pb.orange) curves.add_row({"orange", rr, b, 1.0 / b});
        curves.add_row({"blue_r0", 0.0, pb.blue_r0_beta, 1.0 / pb.blue_r0_beta});
        curves.add_row({"orange_r0", 0.0, pb.orange_r0_beta, 1.0 / pb.orange_r0_beta});
        manifest.set("orange_max_r", pb.orange_max_r);
        manifest.write_table(common.out_dir, "phase_cells.csv", cells);
        manifest.write_table(common.out_dir, "phase_boundaries.csv", curves);
    } else {
        const auto census = steady_state_census(params, config.census);
        CsvTable table({"r", "beta", "solution", "d1", "d2", "class", "peak_masses_type1", "peak_masses_type2", "residual"});
        for (std::size_t k = 0; k < census.solutions.size(); ++k) {
            const auto& s = census.solutions[k];
            table.add_row({census.r, census.beta, static_cast<long long>(k), s.d.d1, s.d.d2, to_string(s.cls),
                           join_masses(s.peak_masses.at(0)), join_masses(s.peak_masses.size() > 1 ? s.peak_masses[1] : std::vector<double>{}),
                           s.residual});
        }
        for (const auto& w : census.warnings) std::cerr << "census: " << w << "\n";
        manifest.set("warnings", census.warnings);
        manifest.write_table(common.out_dir, "census.csv", table);
    }
    manifest.write(common.out_dir);
    return 0;
}

int cmd_nash(const Common& common) {
    const auto config = load(common);
    auto manifest = manifest_for("analyze nash", config);
    const auto nash = envy_free_nash(config.sim.markets, config.sim.bidask);
    CsvTable table({"action", "trading_prob", "return", "common_return", "consistent"});
    for (auto a : kAllActions)
        table.add_row({std::string(action_name(a)), nash.t[a], nash.returns[index(a)], nash.common_return,
                       static_cast<long long>(nash.consistent)});
    manifest.write_table(common.out_dir, "nash.csv", table);
    manifest.write(common.out_dir);
    return nash.consistent ? 0 : kExitNoConvergence;
}

int cmd_returns(const Common& common) {
    const auto config = load(common);
    auto manifest = manifest_for("analyze returns", config);
    const auto params = reduced_params(config);
    const auto curve = return_curve(params, config.sweep.beta_grid, config.sweep.r_grid,
                                    resolve_workers(config.ensemble.workers));
    const auto nash = envy_free_nash(config.sim.markets, config.sim.bidask);
    CsvTable table({"r", "beta", "mean_return", "baseline", "nash_return", "class", "converged"});
    bool all = true;
    for (const auto& p : curve) {
        table.add_row({p.r, p.beta, p.mean_return, p.baseline, nash.common_return, to_string(p.cls),
                       static_cast<long long>(p.converged)});
        all = all && p.converged;
    }
    manifest.write_table(common.out_dir, "returns_curve.csv", table);
    manifest.write(common.out_dir);
    return all ? 0 : kExitNoConvergence;
}

int cmd_autocov(const Common& common, std::optional<std::uint64_t> seed) {
    auto config = load(common);
    if (seed) config.sim.seed = config.ensemble.base_seed = *seed;
    config.validate();
    auto manifest = manifest_for("analyze autocov", config);
    const Trajectory traj = run(config.sim);
    const int stride = config.sim.snapshot_stride();
    const int max_lag = std::min(config.sweep.max_lag, static_cast<int>(traj.snapshots.size() - 1) * stride);
    std::vector<int> lags;
    for (int lag : log_lags(max_lag / stride, config.sweep.lag_count)) lags.push_back(lag * stride);
    const auto mode = config.sweep.autocov_mode == "increment" ? AutocovMode::increment : AutocovMode::central;
    const auto curve = autocovariance(traj, lags, mode);
    CsvTable table({"lag_periods", "tau", "value", "mode"});
    for (std::size_t k = 0; k < curve.lags.size(); ++k)
        table.add_row({static_cast<long long>(curve.lag_periods[k]), curve.lags[k], curve.values[k], config.sweep.autocov_mode});
    manifest.write_table(common.out_dir, "autocov.csv", table);
    if (mode == AutocovMode::central) {
        const auto plateau = find_plateau(curve);
        manifest.set("plateau", {{"found", plateau.found},
                                 {"initial_slope", plateau.initial_slope},
                                 {"tau_begin", plateau.tau_begin},
                                 {"tau_end", plateau.tau_end},
                                 {"value", plateau.value}});
    }
    if (stride == 1) {
        std::map<int, long long> hist;
        for (int d : persistence_times(traj, default_classifier(config.sim.population.kind))) ++hist[d];
        CsvTable dwell({"dwell_periods", "count"});
        for (const auto& [d, c] : hist) dwell.add_row({static_cast<long long>(d), c});
        manifest.write_table(common.out_dir, "persistence.csv", dwell);
    }
    manifest.set("average_return", average_return(traj));
    manifest.write(common.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive traders across two double-auction markets: simulation and mean-field analysis"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
        sub->add_option("--out", common.out_dir, "output directory");
    };

    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    auto* sim = app.add_subcommand("simulate", "ensemble of finite-N runs");
    add_common(sim);
    sim->add_option("--seed", seed, "base seed");
    sim->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);

    std::optional<double> beta, r;
    std::string init_d;
    auto* fp = app.add_subcommand("fp", "self-consistent stationary densities of the reduced model");
    add_common(fp);
    fp->add_option("--beta", beta, "intensity of choice")->check(CLI::NonNegativeNumber);
    fp->add_option("--r", r, "forgetting rate")->check(CLI::Range(0.0, 1.0));
    fp->add_option("--init-d", init_d, "initial demand ratios D1,D2");

    auto* analyze = app.add_subcommand("analyze", "mean-field analyses");
    analyze->require_subcommand(1);
    std::string model = "reduced";
    auto* threshold = analyze->add_subcommand("threshold", "r -> 0 segregation threshold");
    add_common(threshold);
    threshold->add_option("--model", model, "reduced, full or both")->check(CLI::IsMember({"reduced", "full", "both"}));
    bool phase = false;
    auto* census = analyze->add_subcommand("census", "steady states of the demand-ratio map");
    add_common(census);
    census->add_option("--beta", beta, "intensity of choice")->check(CLI::NonNegativeNumber);
    census->add_option("--r", r, "forgetting rate")->check(CLI::Range(0.0, 1.0));
    census->add_flag("--phase", phase, "census over sweep.r_grid x sweep.beta_grid with boundary curves");
    auto* nash = analyze->add_subcommand("nash", "envy-free Nash equilibrium");
    add_common(nash);
    auto* returns = analyze->add_subcommand("returns", "population return against beta");
    add_common(returns);
    auto* autocov = analyze->add_subcommand("autocov", "attraction autocovariance of one run");
    add_common(autocov);
    autocov->add_option("--seed", seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        fs::create_directories(common.out_dir);
        if (sim->parsed()) return cmd_simulate(common, seed, runs);
        if (fp->parsed()) return cmd_fp(common, beta, r, init_d);
        if (threshold->parsed()) return cmd_threshold(common, model);
        if (census->parsed()) return cmd_census(common, beta, r, phase);
        if (nash->parsed()) return cmd_nash(common);
        if (returns->parsed()) return cmd_returns(common);
        if (autocov->parsed()) return cmd_autocov(common, seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
