#pragma once

#include "ammfg/lvr.hpp"
#include "ammfg/mfg_solver.hpp"
#include "ammfg/model.hpp"
#include "ammfg/nplayer.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ammfg {

struct SimConfig {
    struct Pool {
        double x0 = 100.0;
        double y0 = 100.0;
        double tau = 0.003;
    } pool;
    struct Trader {
        double sigma = 0.3;
        double terminal_weight = 1.0;
        bool slippage = true;
        double control_min = -1.0;
        double control_max = 1.0;
        std::size_t control_points = 11;
        double initial_mean = 0.0;
        double initial_sd = 0.25;
        RewardForm reward_form = RewardForm::DynamicsConsistent;
    } trader;
    struct Lp {
        double sigma_x = 0.0;
        double sigma_y = 0.0;
        double sigma_z = 0.0;
        double terminal_weight = 1.0;
        double initial_x = 1.0;
        double initial_y = 0.0;
        double initial_z = 0.0;
        double control_min = -5.0;
        double control_max = 5.0;
        std::size_t segments = 4;
        std::vector<double> control; // segment values; empty means all zero
    } lp;
    struct Market {
        double sigma = 0.2;
        double common_sigma = 0.0;
    } market;
    struct Arbitrage {
        bool enabled = true;
    } arbitrage;
    struct Model {
        bool coupling = true;
        DeltaConvention delta_convention = DeltaConvention::DefinitionConsistent;
    } model;
    struct Grid {
        double horizon = 1.0;
        std::size_t steps = 50;
        double state_min = -3.0;
        double state_max = 3.0;
        std::size_t state_points = 101;
        std::size_t noise_nodes = 3;
        double overflow_tol = 1e-9;
    } grid;
    struct Solver {
        double damping = 0.5;
        double tol = 1e-6;
        std::size_t max_iter = 500;
        double initial_step = 2.5;
        double step_tol = 0.05;
        std::size_t search_budget = 400;
    } solver;
    struct Harness {
        std::vector<std::size_t> n_list{8, 16, 32, 64};
        std::size_t replications = 100;
        std::size_t population = 256;
        NashEstimator estimator = NashEstimator::ConditionalValue;
        bool common_random_numbers = true;
    } harness;
    struct Lvr {
        double sigma = 0.2;
        double horizon = 1.0;
        double p0 = 1.0;
        double k = 10000.0;
        std::size_t paths = 10000;
        std::vector<std::size_t> steps{100, 1000, 10000};
    } lvr;
    struct ArbCheck {
        std::size_t draws = 1000;
        std::size_t grid_points = 2001;
    } arbcheck;
    struct Run {
        std::uint64_t seed = 42;
        std::size_t threads = 0;
    } run;
};

/// Parses `section.key = value` lines (`#` starts a comment) on top of the
/// defaults. Unknown keys, duplicates, malformed values and range violations
/// raise ConfigError naming the key.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);

/// Applies one `section.key=value` assignment and revalidates.
void apply_override(SimConfig& config, const std::string& assignment);

/// Throws ConfigError on any constraint violation.
void validate(const SimConfig& config);

/// Every key in canonical order with shortest round-trip numbers.
std::string canonical_config(const SimConfig& config);

/// FNV-1a 64-bit hash of the canonical text, as 16 hex digits.
std::string config_hash(const SimConfig& config);

ModelParams model_params(const SimConfig& config);
TimeGrid time_grid(const SimConfig& config);
/// LP segment values, zero-filled when unset.
std::vector<double> lp_segments(const SimConfig& config);
MfgProblem mfg_problem(const SimConfig& config);
SolverOptions solver_options(const SimConfig& config);
SearchOptions search_options(const SimConfig& config);
NashOptions nash_options(const SimConfig& config);
LvrExperimentSpec lvr_spec(const SimConfig& config, std::size_t steps);

} // namespace ammfg
