#include "dam/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "dam/auction.hpp"
#include "dam/parallel.hpp"
#include "dam/random.hpp"

namespace dam {

std::string to_string(ModelKind kind) { return kind == ModelKind::full ? "full" : "reduced"; }

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "full") return ModelKind::full;
    if (s == "reduced") return ModelKind::reduced;
    throw std::invalid_argument("population.kind must be \"full\" or \"reduced\", got \"" + s + "\"");
}

void PopulationSpec::validate() const {
    if (n_agents < 2) throw std::invalid_argument("population.n_agents must be >= 2");
    if (kind == ModelKind::reduced) {
        if (type_mix.empty()) throw std::invalid_argument("population.type_mix must not be empty");
        double total = 0.0;
        for (const auto& t : type_mix) {
            if (!(t.p_buy >= 0.0 && t.p_buy <= 1.0))
                throw std::invalid_argument("population.type_mix.p_buy must lie in [0, 1]");
            if (!(t.weight >= 0.0 && t.weight <= 1.0))
                throw std::invalid_argument("population.type_mix.weight must lie in [0, 1]");
            total += t.weight;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("population.type_mix weights must sum to 1");
    }
}

std::vector<int> PopulationSpec::assign_types() const {
    std::vector<int> types(static_cast<std::size_t>(n_agents), 0);
    if (kind != ModelKind::reduced) return types;
    double cumulative = 0.0;
    int start = 0;
    for (std::size_t g = 0; g < type_mix.size(); ++g) {
        cumulative += type_mix[g].weight;
        int stop = g + 1 == type_mix.size()
                       ? n_agents
                       : static_cast<int>(std::lround(cumulative * n_agents));
        stop = std::clamp(stop, start, n_agents);
        for (int i = start; i < stop; ++i) types[i] = static_cast<int>(g);
        start = stop;
    }
    return types;
}

void SimConfig::validate() const {
    population.validate();
    markets.validate();
    bidask.validate();
    learning.validate();
    if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
    if (!(n_periods > burn_in)) throw std::invalid_argument("n_periods must exceed burn_in");
    if (record.snapshot_stride < 0) throw std::invalid_argument("record.snapshot_stride must be >= 0");
}

int SimConfig::snapshot_stride() const {
    if (record.snapshot_stride > 0) return record.snapshot_stride;
    return population.kind == ModelKind::full && population.n_agents >= 1000 ? 10 : 1;
}

int default_window(double r) { return static_cast<int>(std::ceil(10.0 / r - 1e-9)); }

namespace {

// Streams: 0 agent decisions and order prices, 1 + m matching at market m.
struct Streams {
    Rng agents;
    std::array<Rng, kMarkets> matching;

    explicit Streams(std::uint64_t seed)
        : agents(derive_seed(seed, 0)), matching{Rng(derive_seed(seed, 1)), Rng(derive_seed(seed, 2))} {}
};

// Shared period machinery: collects orders per market, clears, and fills
// per-agent scores.
class PeriodClearer {
public:
    explicit PeriodClearer(int n_agents) : scores_(static_cast<std::size_t>(n_agents), 0.0) {}

    void begin() {
        for (auto& o : orders_) o.clear();
    }
    void submit(int market, const Order& order) { orders_[market].push_back(order); }

    void clear(const MarketSpec& markets, Streams& streams, std::array<MarketPeriodStats, kMarkets>& stats) {
        std::fill(scores_.begin(), scores_.end(), 0.0);
        for (int m = 0; m < kMarkets; ++m) {
            clear_market_into(orders_[m], markets.theta[m], streams.matching[m], result_[m]);
            auto& st = stats[m];
            st = MarketPeriodStats{};
            st.price = result_[m].price.value_or(std::numeric_limits<double>::quiet_NaN());
            for (const Order& o : orders_[m]) (o.side == Side::buy ? st.n_buy_orders : st.n_sell_orders)++;
            st.n_valid_buy = static_cast<int>(result_[m].valid_buy_ids.size());
            st.n_valid_sell = static_cast<int>(result_[m].valid_sell_ids.size());
            st.n_trades = static_cast<int>(result_[m].matches.size());
            for (std::size_t i = 0; i < orders_[m].size(); ++i)
                scores_[orders_[m][i].agent_id] = result_[m].scores[i];
        }
    }

    double score(int agent) const { return scores_[agent]; }
    double mean_score() const {
        double s = 0.0;
        for (double x : scores_) s += x;
        return s / static_cast<double>(scores_.size());
    }

private:
    std::array<std::vector<Order>, kMarkets> orders_;
    std::array<ClearingResult, kMarkets> result_;
    std::vector<double> scores_;
};

Trajectory make_trajectory(const SimConfig& config) {
    Trajectory traj;
    traj.config = config;
    traj.generator = std::string(kGeneratorName);
    traj.n_agents = config.population.n_agents;
    traj.state_dim = config.state_dim();
    traj.type_ids = config.population.assign_types();
    if (config.record.trajectories) traj.markets.reserve(static_cast<std::size_t>(config.n_periods));
    if (config.record.returns) traj.mean_return.reserve(static_cast<std::size_t>(config.n_periods));
    return traj;
}

bool take_snapshot(const SimConfig& config, int period) {
    return config.record.snapshots && period >= config.burn_in &&
           (period - config.burn_in) % config.snapshot_stride() == 0;
}

Order draw_order(int agent, bool buy, const BidAskSpec& ba, Rng& rng) {
    return buy ? Order{agent, Side::buy, rng.normal(ba.mu_bid, ba.sigma_bid)}
               : Order{agent, Side::sell, rng.normal(ba.mu_ask, ba.sigma_ask)};
}

void record_period(const SimConfig& config, Trajectory& traj, const PeriodClearer& clearer,
                   const std::array<MarketPeriodStats, kMarkets>& stats) {
    if (config.record.trajectories) traj.markets.push_back(stats);
    if (config.record.returns) traj.mean_return.push_back(clearer.mean_score());
}

}  // namespace

Trajectory run_full(const SimConfig& config) {
    config.validate();
    if (config.population.kind != ModelKind::full) throw std::invalid_argument("run_full requires population.kind = full");
    const int n = config.population.n_agents;
    Trajectory traj = make_trajectory(config);
    Streams streams(config.seed);
    PeriodClearer clearer(n);
    std::vector<AttractionVector> attractions(static_cast<std::size_t>(n), AttractionVector{});
    std::vector<std::int8_t> actions(static_cast<std::size_t>(n), 0);
    std::array<MarketPeriodStats, kMarkets> stats{};

    for (int period = 0; period < config.n_periods; ++period) {
        clearer.begin();
        for (int i = 0; i < n; ++i) {
            const auto p = choice_probs(attractions[i], config.learning.beta);
            const double u = streams.agents.uniform();
            int g = 0;
            double acc = p[0];
            while (g < kActions - 1 && u >= acc) acc += p[++g];
            const Action a = static_cast<Action>(g);
            actions[i] = static_cast<std::int8_t>(g);
            clearer.submit(market_of(a), draw_order(i, is_buy(a), config.bidask, streams.agents));
        }
        clearer.clear(config.markets, streams, stats);
        for (int i = 0; i < n; ++i)
            attractions[i] = update_attractions(attractions[i], static_cast<Action>(actions[i]), clearer.score(i),
                                                config.learning);
        record_period(config, traj, clearer, stats);
        if (take_snapshot(config, period)) {
            Snapshot snap;
            snap.period = period;
            snap.state.reserve(static_cast<std::size_t>(n) * kActions);
            for (const auto& a : attractions) snap.state.insert(snap.state.end(), a.begin(), a.end());
            snap.actions = actions;
            snap.scores.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) snap.scores[i] = clearer.score(i);
            traj.snapshots.push_back(std::move(snap));
        }
    }
    return traj;
}

Trajectory run_reduced(const SimConfig& config) {
    config.validate();
    if (config.population.kind != ModelKind::reduced)
        throw std::invalid_argument("run_reduced requires population.kind = reduced");
    const int n = config.population.n_agents;
    const auto& lp = config.learning;
    const bool one_dimensional = lp.alpha == 1.0;
    Trajectory traj = make_trajectory(config);
    Streams streams(config.seed);
    PeriodClearer clearer(n);
    std::vector<double> p_buy(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p_buy[i] = config.population.type_mix[traj.type_ids[i]].p_buy;
    // Delta at alpha = 1, otherwise the pair (A1, A2).
    std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
    std::vector<std::array<double, 2>> pair(static_cast<std::size_t>(n), {0.0, 0.0});
    std::vector<std::int8_t> actions(static_cast<std::size_t>(n), 0);
    std::array<MarketPeriodStats, kMarkets> stats{};

    for (int period = 0; period < config.n_periods; ++period) {
        clearer.begin();
        for (int i = 0; i < n; ++i) {
            const double d = one_dimensional ? delta[i] : pair[i][0] - pair[i][1];
            const int market = streams.agents.uniform() < choice_prob_market1(d, lp.beta) ? 0 : 1;
            const bool buy = streams.agents.uniform() < p_buy[i];
            actions[i] = static_cast<std::int8_t>(index(make_action(market, buy)));
            clearer.submit(market, draw_order(i, buy, config.bidask, streams.agents));
        }
        clearer.clear(config.markets, streams, stats);
        for (int i = 0; i < n; ++i) {
            const int market = market_of(static_cast<Action>(actions[i]));
            const double s = clearer.score(i);
            if (one_dimensional) {
                delta[i] = update_delta(delta[i], market, s, lp.r);
            } else {
                pair[i][market] = (1.0 - lp.r) * pair[i][market] + lp.r * s;
                pair[i][1 - market] *= 1.0 - lp.alpha * lp.r;
            }
        }
        record_period(config, traj, clearer, stats);
        if (take_snapshot(config, period)) {
            Snapshot snap;
            snap.period = period;
            snap.state.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) snap.state[i] = one_dimensional ? delta[i] : pair[i][0] - pair[i][1];
            snap.actions = actions;
            snap.scores.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) snap.scores[i] = clearer.score(i);
            traj.snapshots.push_back(std::move(snap));
        }
    }
    return traj;
}

Trajectory run(const SimConfig& config) {
    return config.population.kind == ModelKind::full ? run_full(config) : run_reduced(config);
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DAM_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

EnsembleResult run_ensemble(const SimConfig& config, const EnsembleOptions& options) {
    config.validate();
    if (options.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    const int window = options.window > 0 ? options.window : default_window(config.learning.r);
    const int runs = options.n_runs;

    SimConfig base = config;
    base.burn_in = std::max(config.burn_in, config.n_periods - window);
    base.record.trajectories = true;
    base.record.returns = true;
    base.record.snapshots = options.keep_samples;
    base.record.snapshot_stride = 1;
    if (base.burn_in >= base.n_periods) throw std::invalid_argument("window leaves no recorded periods");
    const int recorded = base.n_periods - base.burn_in;

    EnsembleResult out;
    out.n_runs = runs;
    out.window = recorded;
    out.state_dim = config.state_dim();
    out.run_seeds.resize(static_cast<std::size_t>(runs));
    out.run_mean_return.resize(static_cast<std::size_t>(runs));
    out.run_trades.resize(static_cast<std::size_t>(runs));
    std::vector<std::vector<double>> states(static_cast<std::size_t>(runs));
    std::vector<std::vector<int>> types(static_cast<std::size_t>(runs));

    parallel_for(static_cast<std::size_t>(runs), resolve_workers(options.workers), [&](std::size_t k) {
        SimConfig cfg = base;
        cfg.seed = derive_seed(options.base_seed, k);
        out.run_seeds[k] = cfg.seed;
        const Trajectory traj = run(cfg);
        double ret = 0.0;
        long long trades = 0;
        for (int p = cfg.burn_in; p < cfg.n_periods; ++p) {
            ret += traj.mean_return[p];
            for (const auto& m : traj.markets[p]) trades += m.n_trades;
        }
        out.run_mean_return[k] = ret / recorded;
        out.run_trades[k] = trades;
        for (const auto& snap : traj.snapshots) {
            states[k].insert(states[k].end(), snap.state.begin(), snap.state.end());
            types[k].insert(types[k].end(), traj.type_ids.begin(), traj.type_ids.end());
        }
    });

    for (int k = 0; k < runs; ++k) {
        out.pooled_state.insert(out.pooled_state.end(), states[k].begin(), states[k].end());
        out.pooled_type.insert(out.pooled_type.end(), types[k].begin(), types[k].end());
        out.mean_return += out.run_mean_return[k];
        out.total_trades += out.run_trades[k];
    }
    out.mean_return /= runs;
    return out;
}

}  // namespace dam
