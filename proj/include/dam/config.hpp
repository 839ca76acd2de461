// config.hpp - JSON run configuration shared by every subcommand.
#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

#include "dam/bifurcation.hpp"
#include "dam/fp_solver.hpp"
#include "dam/simulator.hpp"

namespace dam {

struct ThresholdOptions {
    double beta_lo = 0.5;
    double beta_hi = 10.0;
    double full_beta_lo = 3.0;
    double full_beta_hi = 10.0;
    double tol = 1e-3;
};

struct SweepOptions {
    std::vector<double> beta_grid{1.0, 2.0, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0};
    std::vector<double> r_grid{0.02, 0.05, 0.1};
    int max_lag = 2000;  // periods, autocov
    int lag_count = 40;
    std::string autocov_mode = "central";
};

struct RunConfig {
    SimConfig sim;
    EnsembleOptions ensemble;
    SolverOptions fp;
    CensusOptions census;
    ThresholdOptions threshold;
    SweepOptions sweep;

    void validate() const;
};

// Thrown for malformed configs; what() names the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);
// FNV-1a 64 of the canonical (sorted-key, compact) echo, as 16 hex digits.
std::string config_hash(const RunConfig& config);

ReducedParams reduced_params(const RunConfig& config);
FullParams full_params(const RunConfig& config);

}  // namespace dam
