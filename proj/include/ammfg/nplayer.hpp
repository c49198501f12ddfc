#pragma once

#include "ammfg/mfg_solver.hpp"
#include "ammfg/sde_engine.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ammfg {

struct NPlayerOptions {
    // Stream index per player (noise and initial state); empty means player i uses i.
    std::vector<std::uint64_t> player_streams;
    // When set, player 0 follows this policy instead of the common one.
    const PolicyGrid* deviator_policy = nullptr;
    bool record_trader_paths = false;
};

struct NPlayerRun {
    std::vector<double> objectives; // realized J per player; empty if the path aborted
    SystemTrajectory trajectory;
    std::size_t dropped = 0;        // 1 when reserves degenerated
};

/// Simulates n explicit traders sharing `policy` (nearest-node lookup) against
/// the problem's LP control. J_i = int f dt - c X_T^2.
NPlayerRun simulate_n_players(std::size_t n, const PolicyGrid& policy, const MfgProblem& problem,
                              std::uint64_t seed, const NPlayerOptions& options = {});

enum class NashEnvironment {
    Empirical, // deviator best-responds to the mean-control path of the pilot run
    MeanField, // deviator best-responds to the mean-field flows
};

enum class NashEstimator {
    // Player 0's objective averaged over its own noise by policy evaluation on
    // the grid against the pilot environment: V_best(x_0) - V_eq(x_0).
    ConditionalValue,
    // Realized J of player 0 in a deviation run minus its realized J in the pilot.
    RealizedPath,
};

struct NashOptions {
    std::size_t replications = 100;
    NashEnvironment environment = NashEnvironment::Empirical;
    NashEstimator estimator = NashEstimator::ConditionalValue;
    bool common_random_numbers = true;
    std::size_t threads = 0;
};

struct NashEstimate {
    std::size_t n = 0;
    double gap = 0.0;
    double std_error = 0.0;
    std::size_t replications = 0; // usable replications
    std::size_t dropped = 0;
    std::vector<double> samples;  // per-replication gaps, replication order
};

/// Monte Carlo estimate of J(deviation) - J(equilibrium) for player 0. Each
/// replication runs a pilot with every player on the equilibrium policy; the
/// deviator best-responds to the pilot's empirical mean-control path.
/// Without common random numbers the equilibrium side uses an independent pilot.
NashEstimate epsilon_nash_gap(std::size_t n, const MfgProblem& problem,
                              const MfgSolution& equilibrium, std::uint64_t seed,
                              const NashOptions& options = {});

struct NashReport {
    std::vector<NashEstimate> rows;
    double slope = 0.0; // least-squares slope of log gap on log N over positive gaps (NaN if < 2)
    std::size_t paths_per_estimate = 0;
    std::uint64_t seed = 0;
};

NashReport convergence_study(const std::vector<std::size_t>& n_list, const MfgProblem& problem,
                             const MfgSolution& equilibrium, std::uint64_t seed,
                             const NashOptions& options = {});

/// Least-squares slope of log y on log x over pairs with y > 0.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace ammfg
