#pragma once

#include "ammfg/agents.hpp"
#include "ammfg/model.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ammfg {

// Probabilists' Gauss-Hermite rule, weights normalized to sum to 1.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussHermite gauss_hermite(std::size_t n);

// Representative trader's discretized control problem: maximize
//   sum_n dt * stages[n](x_n, a_n) - terminal_weight * x_N^2
// over x_{n+1} = x_n + a_n dt + sigma sqrt(dt) Z, with states projected onto
// [states.lo, states.hi] and values linearly interpolated between nodes.
struct TraderProblem {
    TimeGrid time;
    UniformGrid states;
    std::vector<double> controls;
    double sigma = 0.0;
    double terminal_weight = 0.0;
    std::size_t noise_nodes = 1;
    std::vector<StageReward> stages;
};

struct PolicyGrid {
    TimeGrid time;
    UniformGrid states;
    std::vector<double> controls;
    std::vector<std::size_t> policy; // steps x points, index into controls
    std::vector<double> value;       // (steps + 1) x points

    std::size_t policy_index(std::size_t n, std::size_t j) const {
        return policy[n * states.points + j];
    }
    double control(std::size_t n, std::size_t j) const { return controls[policy_index(n, j)]; }
    double value_at(std::size_t n, std::size_t j) const { return value[n * states.points + j]; }
    /// Control at the grid node nearest to x (clamped to the grid).
    double control_at(std::size_t n, double x) const;
};

/// Backward dynamic programming over the control atoms. Ties go to the lowest
/// control index. Throws GridOverflow if one step can cross the whole grid.
PolicyGrid best_response(const TraderProblem& problem);

/// Largest one-step lookahead improvement (or mismatch) over all nodes.
double bellman_residual(const PolicyGrid& policy, const TraderProblem& problem);

/// Value table ((steps + 1) x points) of a fixed policy, using the same
/// quadrature and interpolation as best_response.
std::vector<double> policy_value(const TraderProblem& problem, const PolicyGrid& policy);

/// Expected continuation value of control atom `a` at node (n, j).
double lookahead_value(const TraderProblem& problem, std::span<const double> next_value,
                       std::size_t n, std::size_t j, double a);

struct FlowOfMeasures {
    UniformGrid states;
    std::vector<double> controls;
    std::vector<std::vector<double>> q;  // steps slices over controls
    std::vector<std::vector<double>> mu; // steps + 1 slices over states

    std::vector<double> mean_controls() const;
    ControlLaw control_law(std::size_t n) const;
};

struct NoiseQuadrature {
    double sigma = 0.0;
    std::size_t nodes = 1;
};

/// Pushes initial_law forward through the policy. Mass that would leave the
/// grid is projected onto the boundary; if it exceeds overflow_tol in total
/// GridOverflow is thrown.
FlowOfMeasures induced_flows(const PolicyGrid& policy, std::span<const double> initial_law,
                             const NoiseQuadrature& noise, double overflow_tol = 1e-9);

/// 1-Wasserstein distance between two laws on the same uniform grid.
double w1_distance(std::span<const double> a, std::span<const double> b, double spacing);

/// max_t of W1 between q slices plus W1 between mu slices.
double flow_distance(const FlowOfMeasures& a, const FlowOfMeasures& b);

/// (1 - lambda) * current + lambda * target.
FlowOfMeasures mix_flows(const FlowOfMeasures& current, const FlowOfMeasures& target,
                         double lambda);

// Full model instance seen by the trader population at a fixed LP control.
struct MfgProblem {
    ModelParams params;
    TimeGrid time;
    UniformGrid states{-3.0, 3.0, 101};
    UniformGrid controls{-1.0, 1.0, 11};
    std::size_t noise_nodes = 3;
    double overflow_tol = 1e-9;
    std::vector<double> initial_law; // weights over states
    std::vector<double> lp_control;  // one value per step
};

std::vector<double> control_atoms(const UniformGrid& controls);

/// Gaussian law on the state grid (point mass at the nearest node when sd = 0).
std::vector<double> discretized_normal(const UniformGrid& states, double mean, double sd);

void validate(const MfgProblem& problem);

MarketPath market_for_flows(const MfgProblem& problem, const FlowOfMeasures& flows);
TraderProblem trader_problem(const MfgProblem& problem, const MarketPath& market);
/// Same, for an explicit mean control path (e.g. an empirical one).
TraderProblem trader_problem(const MfgProblem& problem, std::span<const double> mean_control);

/// Flows generated by the policy that always uses the atom closest to zero.
FlowOfMeasures initial_flows(const MfgProblem& problem);

/// One application of best response followed by the induced flows.
FlowOfMeasures apply_mfg_map(const MfgProblem& problem, const FlowOfMeasures& flows,
                             PolicyGrid* policy_out = nullptr);

/// distance(M(flows), flows), computed from scratch.
double fixed_point_residual(const MfgProblem& problem, const FlowOfMeasures& flows);

struct SolverOptions {
    double damping = 0.5;
    double tol = 1e-6;
    std::size_t max_iter = 500;
};

struct MfgSolution {
    PolicyGrid policy;
    FlowOfMeasures flows;
    MarketPath market;
    std::vector<double> residual_history;
    std::size_t iterations = 0;
};

/// Damped Picard iteration on the flows. Throws NotConverged with the full
/// residual history when max_iter is reached.
MfgSolution solve_mfg(const MfgProblem& problem, const SolverOptions& options);

/// LP cost: -(sum dt f_LP) + c (X_T^2 + Z_T^2) along the deterministic flow.
double lp_objective(const MfgProblem& problem, const MfgSolution& solution);

struct SearchOptions {
    std::size_t segments = 4;
    double lp_min = -5.0;
    double lp_max = 5.0;
    double initial_step = 0.0; // 0: a quarter of the bound width
    double step_tol = 0.05;
    std::size_t budget = 400;  // objective evaluations
};

struct SearchStep {
    std::size_t evaluation = 0;
    std::vector<double> lp_values;
    double objective = 0.0;
    double step = 0.0;
    bool converged = true;
    double best_so_far = 0.0;
};

struct EquilibriumSolution {
    std::vector<double> lp_values; // one per segment
    std::vector<double> lp_control;
    MfgSolution mfg;
    double lp_objective = 0.0;
    std::vector<SearchStep> trace;
    double final_step = 0.0;
    std::string status; // "converged" or "budget_exhausted"
};

/// Evaluates the LP cost of piecewise-constant segment values; +inf when the
/// inner fixed point does not converge or reserves degenerate.
double evaluate_lp_candidate(const MfgProblem& base, std::span<const double> lp_values,
                             const SolverOptions& options, MfgSolution* solution_out = nullptr);

/// Coordinate pattern search over LP segment values, each evaluation running
/// the inner fixed point to tolerance.
EquilibriumSolution solve_major_minor(const MfgProblem& base, const SearchOptions& search,
                                      const SolverOptions& options);

} // namespace ammfg
