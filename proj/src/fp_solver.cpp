#include "dam/fp_solver.hpp"

#include <algorithm>
#include <cmath>

#include "dam/learning.hpp"
#include "newton.hpp"

namespace dam {

void ReducedParams::validate() const {
    markets.validate();
    bidask.validate();
    if (alpha != 1.0) throw std::invalid_argument("the reduced Fokker-Planck analysis requires alpha = 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
    if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("r must lie in (0, 1]");
    if (types.empty()) throw std::invalid_argument("at least one agent type is required");
    double total = 0.0;
    for (const auto& t : types) {
        if (t.p_buy < 0.0 || t.p_buy > 1.0) throw std::invalid_argument("type p_buy must lie in [0, 1]");
        if (t.weight < 0.0) throw std::invalid_argument("type weight must be >= 0");
        total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("type weights must sum to 1");
}

ReducedParams reduced_params_from(const SimConfig& config) {
    ReducedParams p;
    p.markets = config.markets;
    p.bidask = config.bidask;
    p.types = config.population.type_mix;
    p.beta = config.learning.beta;
    p.r = config.learning.r;
    p.alpha = config.learning.alpha;
    return p;
}

TypeReturns type_returns(const MarketModel& model, double p_buy, const TradingProbs& t) {
    const auto r1 = model.returns(t);
    const auto r2 = model.second_moments(t);
    TypeReturns out;
    for (int m = 0; m < kMarkets; ++m) {
        const int b = index(make_action(m, true)), s = index(make_action(m, false));
        out.e1[m] = p_buy * r1[b] + (1.0 - p_buy) * r1[s];
        out.e2[m] = p_buy * r2[b] + (1.0 - p_buy) * r2[s];
    }
    return out;
}

JumpMoments jump_moments(double delta, double beta, const TypeReturns& ret) {
    const double p1 = choice_prob_market1(delta, beta);
    const double e1 = ret.e1[0], e2 = ret.e1[1];
    JumpMoments j;
    j.m1 = p1 * e1 - (1.0 - p1) * e2 - delta;
    j.m2 = p1 * (ret.e2[0] - 2.0 * delta * e1 + delta * delta) +
           (1.0 - p1) * (ret.e2[1] + 2.0 * delta * e2 + delta * delta);
    return j;
}

JumpMoments jump_moments_reduced(double delta, double p_buy, double beta, const TradingProbs& t,
                                 const BidAskSpec& bidask, const MarketSpec& markets, double alpha) {
    if (alpha != 1.0) throw std::invalid_argument("jump moments of the reduced model require alpha = 1");
    const auto model = make_market_model(markets, bidask);
    return jump_moments(delta, beta, type_returns(model, p_buy, t));
}

double drift_slope(double delta, double beta, const TypeReturns& ret) {
    const double p1 = choice_prob_market1(delta, beta);
    return beta * p1 * (1.0 - p1) * (ret.e1[0] + ret.e1[1]) - 1.0;
}

Grid default_grid(const ReducedParams& params, int n_points) {
    const auto model = make_market_model(params.markets, params.bidask);
    double top = 0.0, top2 = 0.0;
    for (const auto& type : params.types) {
        const auto ret = type_returns(model, type.p_buy, TradingProbs{});
        top = std::max({top, ret.e1[0], ret.e1[1]});
        top2 = std::max({top2, ret.e2[0], ret.e2[1]});
    }
    const double half = 1.5 * (top > 0.0 ? top : 1.0) + 6.0 * std::sqrt(params.r * top2 / 2.0);
    return {-half, half, n_points, true};
}

namespace {

Density1D density_on(const std::function<JumpMoments(double)>& moments, double r, const Grid& grid) {
    if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
    if (grid.n_points < 5 || !(grid.hi > grid.lo)) throw std::invalid_argument("grid needs hi > lo and >= 5 points");
    Density1D d;
    d.lo = grid.lo;
    d.hi = grid.hi;
    d.values.resize(static_cast<std::size_t>(grid.n_points));
    const int n = grid.n_points;
    const double h = d.step();

    std::vector<double> ratio(n), log_m2(n);
    for (int i = 0; i < n; ++i) {
        const auto j = moments(d.x(i));
        if (!(j.m2 > 0.0)) throw std::domain_error("diffusion moment must be positive on the grid");
        ratio[i] = j.m1 / j.m2;
        log_m2[i] = std::log(j.m2);
    }
    // Cumulative trapezoid from the left edge; the constant cancels on normalization.
    std::vector<double> lp(n);
    double acc = 0.0;
    lp[0] = -log_m2[0];
    for (int i = 1; i < n; ++i) {
        acc += 0.5 * (ratio[i - 1] + ratio[i]) * h;
        lp[i] = (2.0 / r) * acc - log_m2[i];
    }
    const double top = *std::max_element(lp.begin(), lp.end());
    for (int i = 0; i < n; ++i) d.values[i] = std::exp(lp[i] - top);
    const double mass = d.integral();
    for (double& v : d.values) v /= mass;

    const double left = 0.5 * h * (d.values[0] + 2.0 * d.values[1] + d.values[2]);
    const double right = 0.5 * h * (d.values[n - 3] + 2.0 * d.values[n - 2] + d.values[n - 1]);
    if (left > 1e-6 || right > 1e-6)
        throw GridTooNarrow("density grid too narrow: more than 1e-6 of the mass in the outer bins; enlarge the grid");
    return d;
}

}  // namespace

Density1D stationary_density(const std::function<JumpMoments(double)>& moments, double r,
                             const Grid& grid) {
    Grid g = grid;
    for (int attempt = 0;; ++attempt) {
        try {
            return density_on(moments, r, g);
        } catch (const GridTooNarrow&) {
            if (!g.widen || attempt >= 6) throw;
            const double mid = 0.5 * (g.lo + g.hi), half = 0.75 * (g.hi - g.lo);
            g.lo = mid - half;
            g.hi = mid + half;
        }
    }
}

Density1D stationary_density(double p_buy, double beta, const TradingProbs& t, double r,
                             const Grid& grid, const MarketModel& model) {
    const auto ret = type_returns(model, p_buy, t);
    return stationary_density([&](double x) { return jump_moments(x, beta, ret); }, r, grid);
}

std::vector<double> market_fractions(const std::vector<Density1D>& densities, double beta) {
    std::vector<double> f;
    f.reserve(densities.size());
    for (const auto& d : densities) {
        const double mass = d.integral();
        f.push_back(std::clamp(d.expect([&](double x) { return choice_prob_market1(x, beta); }) / mass, 0.0, 1.0));
    }
    return f;
}

DemandRatios demand_ratios_from_fractions(const std::vector<double>& f, const std::vector<AgentType>& types) {
    if (f.size() != types.size()) throw std::invalid_argument("one market fraction per type is required");
    double b1 = 0.0, s1 = 0.0, b2 = 0.0, s2 = 0.0;
    for (std::size_t g = 0; g < f.size(); ++g) {
        const double w = types[g].weight, p = types[g].p_buy;
        b1 += w * f[g] * p;
        s1 += w * f[g] * (1.0 - p);
        b2 += w * (1.0 - f[g]) * p;
        s2 += w * (1.0 - f[g]) * (1.0 - p);
    }
    if (!(s1 > 0.0) || !(s2 > 0.0)) throw std::domain_error("demand ratio undefined: no sellers at a market");
    return {b1 / s1, b2 / s2};
}

DemandRatios demand_ratios_from_densities(const std::vector<Density1D>& densities,
                                          const std::vector<AgentType>& types, double beta) {
    return demand_ratios_from_fractions(market_fractions(densities, beta), types);
}

DemandRatios map_demand_ratios(const ReducedParams& params, DemandRatios d, const Grid& grid,
                               const MarketModel& model, SelfConsistentState* state) {
    const auto t = trading_probs_from_ratios(d, model.validity());
    std::vector<Density1D> densities;
    densities.reserve(params.types.size());
    for (std::size_t g = 0; g < params.types.size(); ++g) {
        densities.push_back(stationary_density(params.types[g].p_buy, params.beta, t, params.r, grid, model));
        densities.back().type_id = static_cast<int>(g);
    }
    // Types that needed a wider range are recomputed so all share one grid.
    double lo = grid.lo, hi = grid.hi;
    for (const auto& dens : densities) {
        lo = std::min(lo, dens.lo);
        hi = std::max(hi, dens.hi);
    }
    if (lo < grid.lo || hi > grid.hi) {
        const Grid common{lo, hi, grid.n_points, false};
        for (std::size_t g = 0; g < params.types.size(); ++g) {
            if (densities[g].lo == lo && densities[g].hi == hi) continue;
            densities[g] = stationary_density(params.types[g].p_buy, params.beta, t, params.r, common, model);
            densities[g].type_id = static_cast<int>(g);
        }
    }
    auto f = market_fractions(densities, params.beta);
    const auto next = demand_ratios_from_fractions(f, params.types);
    if (state) {
        state->densities = std::move(densities);
        state->t = t;
        state->d = d;
        state->market_fractions = std::move(f);
    }
    return next;
}

namespace {

double max_dt(const TradingProbs& a, const TradingProbs& b) {
    double m = 0.0;
    for (int k = 0; k < kActions; ++k) m = std::max(m, std::abs(a.t[k] - b.t[k]));
    return m;
}

}  // namespace

SelfConsistentState solve_self_consistent(const ReducedParams& params, DemandRatios init_d,
                                          const SolverOptions& options) {
    params.validate();
    if (!(options.damping > 0.0 && options.damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
    const Grid grid = options.grid.hi > options.grid.lo ? options.grid : default_grid(params, options.grid.n_points);
    const auto model = make_market_model(params.markets, params.bidask);
    const auto q = model.validity();

    SelfConsistentState state;
    DemandRatios d = init_d;
    const double lambda = options.damping;
    int it = 0;
    for (; it < options.max_iter; ++it) {
        const auto next = map_demand_ratios(params, d, grid, model);
        const double dt = max_dt(trading_probs_from_ratios(d, q), trading_probs_from_ratios(next, q));
        state.trace.push_back({it, d, dt, false});
        if (dt < options.tol) {
            d = next;
            state.converged = true;
            break;
        }
        // Damping in log D keeps the mirror-symmetric line D1 D2 = 1 invariant.
        d = {std::pow(d.d1, 1.0 - lambda) * std::pow(next.d1, lambda),
             std::pow(d.d2, 1.0 - lambda) * std::pow(next.d2, lambda)};
    }

    if (!state.converged && options.newton_fallback) {
        auto f = [&](const Eigen::VectorXd& u) {
            const auto g = map_demand_ratios(params, {std::exp(u[0]), std::exp(u[1])}, grid, model);
            Eigen::VectorXd out(2);
            out << std::log(g.d1) - u[0], std::log(g.d2) - u[1];
            return out;
        };
        Eigen::VectorXd u0(2);
        u0 << std::log(d.d1), std::log(d.d2);
        const auto res = detail::newton_solve(f, u0, 1e-12, 60,
                                              [](const Eigen::VectorXd& u) { return u.cwiseAbs().maxCoeff() < 8.0; });
        d = {std::exp(res.x[0]), std::exp(res.x[1])};
        const auto next = map_demand_ratios(params, d, grid, model);
        const double dt = max_dt(trading_probs_from_ratios(d, q), trading_probs_from_ratios(next, q));
        it += res.iterations;
        state.trace.push_back({it, d, dt, true});
        if (dt < options.tol) {
            d = next;
            state.converged = true;
        }
    }

    map_demand_ratios(params, d, grid, model, &state);
    state.iterations = it;
    return state;
}

}  // namespace dam
