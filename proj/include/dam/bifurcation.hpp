// bifurcation.hpp - small-r fixed points and thresholds, the (D1, D2) steady
// state census, phase boundaries, the envy-free Nash baseline and returns.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dam/fp_solver.hpp"
#include "dam/learning.hpp"

namespace dam {

struct FixedPoint {
    std::vector<double> location;  // Delta (reduced) or A_B1..A_S2 (full)
    bool stable = false;
    double residual = 0.0;   // max |drift| at the point
    double max_eigen = 0.0;  // drift slope (1-D) or largest Jacobian eigenvalue (4-D)
};

struct FixedPointSet {
    std::vector<FixedPoint> points;
    ModelKind kind = ModelKind::reduced;
    int type_id = 0;
    TradingProbs t_context;
    int dropped = 0;  // non-convergent starts (multi-start search only)

    int n_stable() const;
};


struct HomogeneousState {
    std::vector<double> delta;  // one peak position per type
    TradingProbs t;
    DemandRatios d;
    double residual = 0.0;
    bool converged = false;
};

// Point-mass peaks at drift zeros with T self-consistent, continued in beta
// from beta = 0 where the solution is explicit.
HomogeneousState homogeneous_state_r0(const ReducedParams& params);

// All zeros of m1 on [lo, hi] (default [-E_2, E_1] padded by 1%) from a sign
// scan plus bisection.
FixedPointSet single_agent_fixed_points(double p_buy, double beta, const TradingProbs& t_fixed,
                                        const MarketModel& model,
                                        std::optional<std::pair<double, double>> search_interval = {},
                                        int n_scan = 10000);

// True when some type has at least two stable drift zeros at the
// homogeneous-state T.
bool reduced_segregation_predicate(const ReducedParams& params);

struct ThresholdResult {
    double beta_s = 0.0;
    double beta_lo = 0.0;  // final bracket
    double beta_hi = 0.0;
    int evaluations = 0;
};

// Bisection on beta to relative tolerance `tol`. Throws std::runtime_error
// listing the predicate values when [beta_lo, beta_hi] is not a bracket.
ThresholdResult beta_s_reduced(const ReducedParams& params, double beta_lo = 0.5, double beta_hi = 10.0,
                               double tol = 1e-3);


struct FullParams {
    MarketSpec markets;
    BidAskSpec bidask;
    double beta = 1.0;
    double alpha = 1.0;
    void validate() const;
};

struct FullHomogeneousState {
    AttractionVector a{};
    TradingProbs t;
    double residual = 0.0;
    bool converged = false;
};

// A = P(A) Q T(P) e with T from the expected valid-order counts Q P.
FullHomogeneousState homogeneous_state_full_r0(const FullParams& params);

enum class FixedPointSearch { lambert_w, multi_start };

// Zeros of A_g = P(g|A) R_g at fixed R = Q T e. The Lambert-W search
// enumerates every solution branch exactly; the multi-start search iterates
// P <- softmax(beta P R) from the simplex center, 4 corners and 6 edge midpoints.
FixedPointSet full_model_fixed_points_r0(const FullParams& params, const TradingProbs& t_fixed,
                                         FixedPointSearch search = FixedPointSearch::lambert_w);
// Same, at the homogeneous-state T.
FixedPointSet full_model_fixed_points_r0(const FullParams& params,
                                         FixedPointSearch search = FixedPointSearch::lambert_w);

// True when each of the four actions is the preferred action of some stable
// fixed point at the homogeneous-state T.
bool full_segregation_predicate(const FullParams& params);

ThresholdResult beta_s_full(const FullParams& params, double beta_lo = 3.0, double beta_hi = 10.0,
                            double tol = 1e-3);


// One application of d -> T -> densities -> d at params.beta, params.r.
DemandRatios selfconsistency_map(DemandRatios d, const ReducedParams& params);

enum class SolutionClass { U, S, W };
std::string to_string(SolutionClass c);

struct CensusSolution {
    DemandRatios d;
    SolutionClass cls = SolutionClass::U;
    std::vector<std::vector<double>> peak_masses;  // per type
    double residual = 0.0;
};

struct CensusOptions {
    int grid_points = 81;  // per axis over log D in [-span, span]
    double span = 2.0;
    double w_min = 0.05;
    double min_peak_mass = 1e-9;
    Grid density_grid{0.0, 0.0, 2001};  // lo == hi selects default_grid
};

struct SteadyStateCensus {
    double r = 0.0;
    double beta = 0.0;
    std::vector<CensusSolution> solutions;
    int failed_cells = 0;
    std::vector<std::string> warnings;
};

SteadyStateCensus steady_state_census(const ReducedParams& params, const CensusOptions& options = {});

// Classifies a set of densities as U, S or W.
SolutionClass classify(const std::vector<Density1D>& densities, double w_min, double min_peak_mass,
                       std::vector<std::vector<double>>* masses = nullptr);

struct PhaseCell {
    double r = 0.0;
    double beta = 0.0;
    int n_solutions = 0;
    bool segregated = false;  // any S or W solution
};

struct PhaseBoundaries {
    std::vector<PhaseCell> cells;
    // Blue: smallest beta on the grid with a segregated solution, per r (NaN if none).
    std::vector<std::pair<double, double>> blue;   // (r, beta)
    // Orange: per beta, midpoint between the largest r with three solutions
    // and the next grid r (NaN if none).
    std::vector<std::pair<double, double>> orange;  // (beta, r)
    double orange_max_r = 0.0;
    double blue_r0_beta = 0.0;    // beta_s_reduced
    double orange_r0_beta = 0.0;  // first grid beta where the point-mass map has an off-diagonal (D1 D2 != 1) pair
};

PhaseBoundaries phase_boundaries(const ReducedParams& params, const std::vector<double>& r_grid,
                                 const std::vector<double>& beta_grid, const CensusOptions& options = {},
                                 int workers = 1);

// Fixed points of the r -> 0 map where each type's density is a point mass
// at the deepest well of its drift potential.
std::vector<DemandRatios> point_mass_census(const ReducedParams& params, const CensusOptions& options = {});


struct NashSolution {
    TradingProbs t;
    PerAction<double> returns{};
    double common_return = 0.0;
    bool consistent = false;
    std::array<bool, kMarkets> buyers_minority{};
};

NashSolution envy_free_nash(const MarketSpec& markets, const BidAskSpec& bidask);

struct ReturnPoint {
    double r = 0.0;
    double beta = 0.0;
    double mean_return = 0.0;   // default-start self-consistent solution
    double baseline = 0.0;      // homogeneous r -> 0 branch
    bool converged = false;
    SolutionClass cls = SolutionClass::U;
};

// Population return sum_g w_g ∫ P(Δ|g) [p1 E_1 + (1 - p1) E_2] dΔ.
double population_return(const ReducedParams& params, const SelfConsistentState& state);
double homogeneous_return(const ReducedParams& params, const HomogeneousState& state);

std::vector<ReturnPoint> return_curve(const ReducedParams& params, const std::vector<double>& beta_grid,
                                      const std::vector<double>& r_list, int workers = 1);

}  // namespace dam
