// fp_solver.hpp - reduced-model drift/diffusion, stationary densities and the
// self-consistent loop over trading probabilities.
#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dam/density.hpp"
#include "dam/meanfield.hpp"
#include "dam/simulator.hpp"

namespace dam {

struct ReducedParams {
    MarketSpec markets;
    BidAskSpec bidask;
    std::vector<AgentType> types{{0.8, 0.5}, {0.2, 0.5}};
    double beta = 1.0;
    double r = 0.1;
    double alpha = 1.0;

    // Rejects alpha != 1: the one-dimensional reduction needs it.
    void validate() const;
};

ReducedParams reduced_params_from(const SimConfig& config);

struct JumpMoments {
    double m1 = 0.0;
    double m2 = 0.0;
};

// Unconditional per-period score moments of one type at each market,
// mixing its buy and sell actions by p_buy.
struct TypeReturns {
    std::array<double, kMarkets> e1{};
    std::array<double, kMarkets> e2{};
};

TypeReturns type_returns(const MarketModel& model, double p_buy, const TradingProbs& t);

JumpMoments jump_moments(double delta, double beta, const TypeReturns& ret);
// Throws std::invalid_argument when alpha != 1.
JumpMoments jump_moments_reduced(double delta, double p_buy, double beta, const TradingProbs& t,
                                 const BidAskSpec& bidask, const MarketSpec& markets,
                                 double alpha = 1.0);
// d m1 / d Delta in closed form.
double drift_slope(double delta, double beta, const TypeReturns& ret);

struct Grid {
    double lo = -1.5;
    double hi = 1.5;
    int n_points = 2001;
    bool widen = false;  // grow the range by 1.5x (up to 6 times) instead of failing
};

// [-L, L] with L = 1.5 E + 6 sqrt(r E2 / 2), E and E2 the largest first and
// second moments at T = 1 over types and markets; widening enabled.
Grid default_grid(const ReducedParams& params, int n_points = 2001);

struct GridTooNarrow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// P ∝ exp((2/r) ∫ m1/m2 - log m2) on the grid, normalized by trapezoid.
// Throws GridTooNarrow when the outermost two bins on either side hold
// more than 1e-6 of the mass (after widening, if enabled).
Density1D stationary_density(const std::function<JumpMoments(double)>& moments, double r,
                             const Grid& grid);
Density1D stationary_density(double p_buy, double beta, const TradingProbs& t, double r,
                             const Grid& grid, const MarketModel& model);

// f_g = <logistic(beta Delta)> under each type's density.
std::vector<double> market_fractions(const std::vector<Density1D>& densities, double beta);
// Throws std::domain_error on an empty seller side.
DemandRatios demand_ratios_from_fractions(const std::vector<double>& f,
                                          const std::vector<AgentType>& types);
DemandRatios demand_ratios_from_densities(const std::vector<Density1D>& densities,
                                          const std::vector<AgentType>& types, double beta);

struct SolverOptions {
    double damping = 0.5;
    double tol = 1e-6;  // on max |T_new - T_old|
    int max_iter = 2000;
    bool newton_fallback = true;
    Grid grid{0.0, 0.0, 2001};  // lo == hi selects default_grid
};

struct TraceRow {
    int iteration = 0;
    DemandRatios d;
    double max_dt = 0.0;
    bool newton = false;
};

struct SelfConsistentState {
    std::vector<Density1D> densities;
    TradingProbs t;
    DemandRatios d;
    std::vector<double> market_fractions;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceRow> trace;
};

// One application of d -> T -> densities -> d. When `state` is given it
// receives the densities, T and fractions at the input d.
DemandRatios map_demand_ratios(const ReducedParams& params, DemandRatios d, const Grid& grid,
                               const MarketModel& model, SelfConsistentState* state = nullptr);

// Damped iteration d <- (1-λ) d + λ G(d). When it stalls, Newton on log d
// continues from the last iterate.
SelfConsistentState solve_self_consistent(const ReducedParams& params, DemandRatios init_d = {},
                                          const SolverOptions& options = {});

}  // namespace dam
