// stats.hpp - observables over simulated populations and grid densities.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dam/density.hpp"
#include "dam/learning.hpp"
#include "dam/simulator.hpp"

namespace dam {

struct ProjectedAttractions {
    double delta_bs = 0.0;  // (A_B1 + A_B2) - (A_S1 + A_S2)
    double delta_12 = 0.0;  // (A_B1 + A_S1) - (A_B2 + A_S2)
};

ProjectedAttractions project(const AttractionVector& a);

// B = 1 - <x^4> / (3 <x^2>^2). Throws std::domain_error when <x^2> = 0.
double binder(std::span<const double> samples);
double binder(const Density1D& density);
// Mean of the per-type cumulants, for samples labelled by type.
double binder_by_type(std::span<const double> samples, std::span<const int> types);

enum class AutocovMode { central, increment };

struct AutocovCurve {
    std::vector<int> lag_periods;
    std::vector<double> lags;  // rescaled time tau = lag * r
    std::vector<double> values;
    AutocovMode mode = AutocovMode::central;
};

// Trace of the attraction autocovariance over the recorded snapshots,
// averaged over agents and origins. Central mode uses deviations from the
// per-component mean of the whole segment; increment mode averages
// (A(t0+tau) - A(t0))^2. Lags must be multiples of the snapshot stride.
AutocovCurve autocovariance(const Trajectory& traj, std::span<const int> lag_periods,
                            AutocovMode mode = AutocovMode::central);

// Log-spaced integer lags from 1 to max_lag, duplicates removed, 0 first.
std::vector<int> log_lags(int max_lag, int count);

struct PlateauInfo {
    bool found = false;
    double initial_slope = 0.0;  // peak |dC/dlog tau| of the first decay
    double tau_begin = 0.0;
    double tau_end = 0.0;
    double value = 0.0;  // C at the flattest point of the window
};

// Looks for lags after the first decay where |dC/dlog tau| drops below
// rel_slope * initial_slope while C still holds at least min_level * C(0).
PlateauInfo find_plateau(const AutocovCurve& curve, double rel_slope = 0.05, double min_level = 0.1);

enum class PersistenceClassifier { sign_delta, argmax_attraction, chosen_market };

// Lengths (in periods) of constant-label runs per agent, including the
// censored first and last runs. Requires snapshot stride 1.
std::vector<int> persistence_times(const Trajectory& traj, PersistenceClassifier classifier);
PersistenceClassifier default_classifier(ModelKind kind);

// Mean score per agent-period over [burn_in, n_periods), zeros included.
double average_return(const Trajectory& traj);

struct Histogram2D {
    int nx = 0, ny = 0;
    double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
    std::vector<double> mass;  // nx*ny cell probabilities, x-major: mass[ix*ny+iy]
    std::vector<double> marginal_x, marginal_y;

    double at(int ix, int iy) const { return mass[static_cast<std::size_t>(ix) * ny + iy]; }
    double cell_area() const { return (x_hi - x_lo) / nx * (y_hi - y_lo) / ny; }
};

// Bins cover [lo, hi] of each coordinate; a degenerate range is widened by 1.
Histogram2D histogram2d(std::span<const ProjectedAttractions> samples, int bins_x, int bins_y);

struct Peak {
    int ix = 0, iy = 0;
    double mass = 0.0;  // basin mass under 8-neighbour steepest ascent
};

// Sturges' rule, ceil(log2 n) + 1 bins per axis.
int sturges_bins(std::size_t n);

// 8-neighbour local maxima whose steepest-ascent basins hold at least min_mass.
std::vector<Peak> find_peaks(const Histogram2D& h, double min_mass = 0.02);

// Masses of the basins between consecutive local minima of a 1-D density,
// ignoring maxima whose basin holds less than min_mass.
std::vector<double> peak_masses(const Density1D& density, double min_mass = 1e-9);
int count_modes(const Density1D& density, double min_mass = 1e-9);

// L1 distance between a grid density and the histogram of samples on the
// same grid range with `bins` bins (density integrated over each bin).
double l1_distance(const Density1D& density, std::span<const double> samples, int bins);

}  // namespace dam
