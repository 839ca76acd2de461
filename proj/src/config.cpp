#include "dam/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace dam {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError((path.empty() ? key : path + "." + key) + ": unknown key");
    }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

template <class T>
void read(const json& j, const std::string& path, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigError("expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw ConfigError("expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw ConfigError("expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!it->is_string()) throw ConfigError("expected a string");
        }
        out = it->get<T>();
    } catch (const std::exception& e) {
        throw ConfigError(join(path, key) + ": " + e.what());
    }
}

void read_list(const json& j, const std::string& path, const char* key, std::vector<double>& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const json& v) { return v.is_number(); }))
        throw ConfigError(join(path, key) + ": expected an array of numbers");
    out = it->get<std::vector<double>>();
}

// Runs `check`, re-throwing its message under `path`.
template <class F>
void validated(const std::string& path, F&& check) {
    try {
        check();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    validated("simulation", [&] { sim.validate(); });
    if (ensemble.n_runs < 1) throw ConfigError("ensemble.runs: must be >= 1");
    if (ensemble.window < 0) throw ConfigError("ensemble.window: must be >= 0");
    if (!(fp.damping > 0.0 && fp.damping <= 1.0)) throw ConfigError("fp.damping: must lie in (0, 1]");
    if (!(fp.tol > 0.0)) throw ConfigError("fp.tol: must be positive");
    if (fp.max_iter < 1) throw ConfigError("fp.max_iter: must be >= 1");
    if (fp.grid.n_points < 5) throw ConfigError("fp.grid_points: must be >= 5");
    if (fp.grid.hi < fp.grid.lo) throw ConfigError("fp.grid_half_width: must be >= 0");
    if (census.grid_points < 3) throw ConfigError("census.grid_points: must be >= 3");
    if (!(census.span > 0.0)) throw ConfigError("census.span: must be positive");
    if (!(census.w_min > 0.0 && census.w_min < 1.0)) throw ConfigError("census.w_min: must lie in (0, 1)");
    if (!(threshold.beta_hi > threshold.beta_lo) || threshold.beta_lo < 0.0)
        throw ConfigError("threshold.beta_lo: bracket must satisfy 0 <= beta_lo < beta_hi");
    if (!(threshold.full_beta_hi > threshold.full_beta_lo) || threshold.full_beta_lo < 0.0)
        throw ConfigError("threshold.full_beta_lo: bracket must satisfy 0 <= full_beta_lo < full_beta_hi");
    if (!(threshold.tol > 0.0)) throw ConfigError("threshold.tol: must be positive");
    if (sweep.beta_grid.empty()) throw ConfigError("sweep.beta_grid: must not be empty");
    if (sweep.r_grid.empty()) throw ConfigError("sweep.r_grid: must not be empty");
    for (double b : sweep.beta_grid)
        if (!(b >= 0.0)) throw ConfigError("sweep.beta_grid: values must be >= 0");
    for (double r : sweep.r_grid)
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("sweep.r_grid: values must lie in (0, 1]");
    if (sweep.max_lag < 1) throw ConfigError("sweep.max_lag: must be >= 1");
    if (sweep.lag_count < 2) throw ConfigError("sweep.lag_count: must be >= 2");
    if (sweep.autocov_mode != "central" && sweep.autocov_mode != "increment")
        throw ConfigError("sweep.autocov_mode: must be \"central\" or \"increment\"");
}

RunConfig config_from_json(const json& root) {
    RunConfig c;
    check_keys(root, "", {"population", "markets", "bidask", "learning", "simulation", "ensemble", "fp", "census",
                          "threshold", "sweep"});

    if (const auto it = root.find("population"); it != root.end()) {
        const json& j = *it;
        check_keys(j, "population", {"n_agents", "kind", "type_mix"});
        read(j, "population", "n_agents", c.sim.population.n_agents);
        std::string kind = to_string(c.sim.population.kind);
        read(j, "population", "kind", kind);
        validated("population.kind", [&] { c.sim.population.kind = model_kind_from_string(kind); });
        if (const auto tm = j.find("type_mix"); tm != j.end()) {
            if (!tm->is_array() || tm->empty()) throw ConfigError("population.type_mix: expected a non-empty array");
            c.sim.population.type_mix.clear();
            for (std::size_t i = 0; i < tm->size(); ++i) {
                const std::string path = "population.type_mix[" + std::to_string(i) + "]";
                AgentType t;
                check_keys((*tm)[i], path, {"p_buy", "weight"});
                read((*tm)[i], path, "p_buy", t.p_buy);
                read((*tm)[i], path, "weight", t.weight);
                c.sim.population.type_mix.push_back(t);
            }
        }
    }
    if (const auto it = root.find("markets"); it != root.end()) {
        check_keys(*it, "markets", {"theta"});
        std::vector<double> theta(c.sim.markets.theta.begin(), c.sim.markets.theta.end());
        read_list(*it, "markets", "theta", theta);
        if (theta.size() != kMarkets) throw ConfigError("markets.theta: expected two values");
        c.sim.markets.theta = {theta[0], theta[1]};
    }
    if (const auto it = root.find("bidask"); it != root.end()) {
        check_keys(*it, "bidask", {"mu_ask", "sigma_ask", "mu_bid", "sigma_bid"});
        read(*it, "bidask", "mu_ask", c.sim.bidask.mu_ask);
        read(*it, "bidask", "sigma_ask", c.sim.bidask.sigma_ask);
        read(*it, "bidask", "mu_bid", c.sim.bidask.mu_bid);
        read(*it, "bidask", "sigma_bid", c.sim.bidask.sigma_bid);
    }
    if (const auto it = root.find("learning"); it != root.end()) {
        check_keys(*it, "learning", {"beta", "r", "alpha"});
        read(*it, "learning", "beta", c.sim.learning.beta);
        read(*it, "learning", "r", c.sim.learning.r);
        read(*it, "learning", "alpha", c.sim.learning.alpha);
    }
    if (const auto it = root.find("simulation"); it != root.end()) {
        const json& j = *it;
        check_keys(j, "simulation", {"n_periods", "burn_in", "seed", "record"});
        read(j, "simulation", "n_periods", c.sim.n_periods);
        read(j, "simulation", "burn_in", c.sim.burn_in);
        read(j, "simulation", "seed", c.sim.seed);
        if (const auto rec = j.find("record"); rec != j.end()) {
            check_keys(*rec, "simulation.record", {"trajectories", "returns", "snapshots", "snapshot_stride"});
            read(*rec, "simulation.record", "trajectories", c.sim.record.trajectories);
            read(*rec, "simulation.record", "returns", c.sim.record.returns);
            read(*rec, "simulation.record", "snapshots", c.sim.record.snapshots);
            read(*rec, "simulation.record", "snapshot_stride", c.sim.record.snapshot_stride);
        }
    }
    if (const auto it = root.find("ensemble"); it != root.end()) {
        check_keys(*it, "ensemble", {"runs", "window", "workers"});
        read(*it, "ensemble", "runs", c.ensemble.n_runs);
        read(*it, "ensemble", "window", c.ensemble.window);
        read(*it, "ensemble", "workers", c.ensemble.workers);
    }
    c.ensemble.base_seed = c.sim.seed;
    if (const auto it = root.find("fp"); it != root.end()) {
        const json& j = *it;
        check_keys(j, "fp", {"damping", "tol", "max_iter", "newton_fallback", "grid_points", "grid_half_width"});
        read(j, "fp", "damping", c.fp.damping);
        read(j, "fp", "tol", c.fp.tol);
        read(j, "fp", "max_iter", c.fp.max_iter);
        read(j, "fp", "newton_fallback", c.fp.newton_fallback);
        read(j, "fp", "grid_points", c.fp.grid.n_points);
        double half = c.fp.grid.hi;
        read(j, "fp", "grid_half_width", half);
        c.fp.grid.lo = -half;
        c.fp.grid.hi = half;
    }
    if (const auto it = root.find("census"); it != root.end()) {
        check_keys(*it, "census", {"grid_points", "span", "w_min", "min_peak_mass"});
        read(*it, "census", "grid_points", c.census.grid_points);
        read(*it, "census", "span", c.census.span);
        read(*it, "census", "w_min", c.census.w_min);
        read(*it, "census", "min_peak_mass", c.census.min_peak_mass);
    }
    if (const auto it = root.find("threshold"); it != root.end()) {
        check_keys(*it, "threshold", {"beta_lo", "beta_hi", "full_beta_lo", "full_beta_hi", "tol"});
        read(*it, "threshold", "beta_lo", c.threshold.beta_lo);
        read(*it, "threshold", "beta_hi", c.threshold.beta_hi);
        read(*it, "threshold", "full_beta_lo", c.threshold.full_beta_lo);
        read(*it, "threshold", "full_beta_hi", c.threshold.full_beta_hi);
        read(*it, "threshold", "tol", c.threshold.tol);
    }
    if (const auto it = root.find("sweep"); it != root.end()) {
        check_keys(*it, "sweep", {"beta_grid", "r_grid", "max_lag", "lag_count", "autocov_mode"});
        read_list(*it, "sweep", "beta_grid", c.sweep.beta_grid);
        read_list(*it, "sweep", "r_grid", c.sweep.r_grid);
        read(*it, "sweep", "max_lag", c.sweep.max_lag);
        read(*it, "sweep", "lag_count", c.sweep.lag_count);
        read(*it, "sweep", "autocov_mode", c.sweep.autocov_mode);
    }
    c.census.density_grid = c.fp.grid;
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c) {
    json types = json::array();
    for (const auto& t : c.sim.population.type_mix) types.push_back({{"p_buy", t.p_buy}, {"weight", t.weight}});
    return {
        {"population", {{"n_agents", c.sim.population.n_agents}, {"kind", to_string(c.sim.population.kind)}, {"type_mix", types}}},
        {"markets", {{"theta", {c.sim.markets.theta[0], c.sim.markets.theta[1]}}}},
        {"bidask",
         {{"mu_ask", c.sim.bidask.mu_ask},
          {"sigma_ask", c.sim.bidask.sigma_ask},
          {"mu_bid", c.sim.bidask.mu_bid},
          {"sigma_bid", c.sim.bidask.sigma_bid}}},
        {"learning", {{"beta", c.sim.learning.beta}, {"r", c.sim.learning.r}, {"alpha", c.sim.learning.alpha}}},
        {"simulation",
         {{"n_periods", c.sim.n_periods},
          {"burn_in", c.sim.burn_in},
          {"seed", c.sim.seed},
          {"record",
           {{"trajectories", c.sim.record.trajectories},
            {"returns", c.sim.record.returns},
            {"snapshots", c.sim.record.snapshots},
            {"snapshot_stride", c.sim.record.snapshot_stride}}}}},
        {"ensemble", {{"runs", c.ensemble.n_runs}, {"window", c.ensemble.window}, {"workers", c.ensemble.workers}}},
        {"fp",
         {{"damping", c.fp.damping},
          {"tol", c.fp.tol},
          {"max_iter", c.fp.max_iter},
          {"newton_fallback", c.fp.newton_fallback},
          {"grid_points", c.fp.grid.n_points},
          {"grid_half_width", c.fp.grid.hi}}},
        {"census",
         {{"grid_points", c.census.grid_points},
          {"span", c.census.span},
          {"w_min", c.census.w_min},
          {"min_peak_mass", c.census.min_peak_mass}}},
        {"threshold",
         {{"beta_lo", c.threshold.beta_lo},
          {"beta_hi", c.threshold.beta_hi},
          {"full_beta_lo", c.threshold.full_beta_lo},
          {"full_beta_hi", c.threshold.full_beta_hi},
          {"tol", c.threshold.tol}}},
        {"sweep",
         {{"beta_grid", c.sweep.beta_grid},
          {"r_grid", c.sweep.r_grid},
          {"max_lag", c.sweep.max_lag},
          {"lag_count", c.sweep.lag_count},
          {"autocov_mode", c.sweep.autocov_mode}}},
    };
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const RunConfig& config) {
    const std::string text = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ReducedParams reduced_params(const RunConfig& config) { return reduced_params_from(config.sim); }

FullParams full_params(const RunConfig& config) {
    FullParams p;
    p.markets = config.sim.markets;
    p.bidask = config.sim.bidask;
    p.beta = config.sim.learning.beta;
    p.alpha = config.sim.learning.alpha;
    return p;
}

}  // namespace dam
