// simulator.hpp - seeded finite-N runs of the adaptive trading population.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dam/learning.hpp"
#include "dam/meanfield.hpp"

namespace dam {

enum class ModelKind { full, reduced };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct AgentType {
    double p_buy = 0.5;
    double weight = 1.0;
};

struct PopulationSpec {
    int n_agents = 200;
    ModelKind kind = ModelKind::full;
    // Used by the reduced model only.
    std::vector<AgentType> type_mix{{0.8, 0.5}, {0.2, 0.5}};

    void validate() const;
    // Type index per agent. Agents are assigned in blocks, type g receiving
    // round(cumulative weight * N) - previous agents.
    std::vector<int> assign_types() const;
};

struct RecordFlags {
    bool trajectories = true;  // per-period market statistics
    bool returns = true;       // per-period population mean score
    bool snapshots = true;     // per-agent state, action and score
    int snapshot_stride = 0;   // 0 selects 1 (reduced / small N) or 10 (full, N >= 1000)
};

struct SimConfig {
    PopulationSpec population;
    MarketSpec markets;
    BidAskSpec bidask;
    LearningParams learning;
    int n_periods = 5100;
    int burn_in = 5000;
    std::uint64_t seed = 1;
    RecordFlags record;

    void validate() const;
    int snapshot_stride() const;
    // Attraction components stored per agent: 4 (full) or 1 (reduced, Delta).
    int state_dim() const { return population.kind == ModelKind::full ? kActions : 1; }
};

// ceil(10 / r): the default measurement window.
int default_window(double r);

struct MarketPeriodStats {
    double price = 0.0;  // NaN when one side submitted nothing
    int n_buy_orders = 0;
    int n_sell_orders = 0;
    int n_valid_buy = 0;
    int n_valid_sell = 0;
    int n_trades = 0;
};

struct Snapshot {
    int period = 0;
    std::vector<double> state;         // n_agents * state_dim, after this period's update
    std::vector<std::int8_t> actions;  // Action index (full) or 2*market + (sell ? 1 : 0) (reduced)
    std::vector<double> scores;
};

struct Trajectory {
    SimConfig config;
    std::string generator;
    int n_agents = 0;
    int state_dim = 0;
    std::vector<int> type_ids;
    std::vector<std::array<MarketPeriodStats, kMarkets>> markets;  // every period
    std::vector<double> mean_return;                               // every period
    std::vector<Snapshot> snapshots;  // periods in [burn_in, n_periods) at the stride

    // Attraction of agent `agent`, component `c` in snapshot `s`.
    double state(std::size_t s, int agent, int c = 0) const {
        return snapshots[s].state[static_cast<std::size_t>(agent) * state_dim + c];
    }
};

Trajectory run_full(const SimConfig& config);
Trajectory run_reduced(const SimConfig& config);
// Dispatches on config.population.kind.
Trajectory run(const SimConfig& config);

struct EnsembleOptions {
    int n_runs = 1;
    std::uint64_t base_seed = 1;
    int window = 0;  // 0 selects default_window(r)
    bool keep_samples = true;
    int workers = 0;  // 0 reads DAM_WORKERS, falling back to hardware concurrency
};

struct EnsembleResult {
    int n_runs = 0;
    int window = 0;
    int state_dim = 0;
    std::vector<std::uint64_t> run_seeds;
    // Pooled final-window samples in (run, period, agent) order.
    std::vector<double> pooled_state;
    std::vector<int> pooled_type;
    std::vector<double> run_mean_return;  // mean score per agent-period over the window
    std::vector<long long> run_trades;    // trades over the window, both markets
    double mean_return = 0.0;
    long long total_trades = 0;

    std::size_t n_samples() const { return pooled_type.size(); }
};

// Run seeds are derive_seed(base_seed, run index). Each run records snapshots
// of its final `window` periods only.
EnsembleResult run_ensemble(const SimConfig& config, const EnsembleOptions& options);

int resolve_workers(int requested);

}  // namespace dam
