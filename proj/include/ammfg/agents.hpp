#pragma once

#include "ammfg/model.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace ammfg {

struct TraderState {
    double x = 0.0; // ETH
    double y = 0.0; // USDT
};

struct LPState {
    double x = 0.0;                  // ETH holdings
    double y = 0.0;                  // USDT holdings
    double z = 0.0;                  // pool share in USDT
    double cumulative_control = 0.0; // S_t = int alpha_lp dt
};

struct ControlAtom {
    double value = 0.0;
    double weight = 0.0;
};

// Discrete law of trader controls.
struct ControlLaw {
    std::vector<ControlAtom> atoms;

    static ControlLaw point_mass(double value) { return ControlLaw{{{value, 1.0}}}; }
    double mean() const noexcept;
    /// Throws InvalidParameter unless weights are nonnegative, sum to 1
    /// within 1e-12 and every atom lies in [lo, hi].
    void validate(double lo, double hi) const;
};

struct MeanFieldAggregates {
    double mean_control = 0.0; // int a dq_t
    double lvr_rate = 0.0;     // l(P_t)
    double h_q = 0.0;          // int_0^t l ds - int_0^t int a dq_s ds
    double g_factor = 0.0;     // 1 / ((x_adj + H)(x_adj + phi H))
    double delta_rate = 0.0;   // dH/dt under the chosen convention
};

struct TraderDrift {
    double dx_rate = 0.0;
    double dy_rate = 0.0;
};

struct LpNoise {
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;
};

struct LpVols {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Running reward written as state_coef*x + control_coef*a + control_sq_coef*a^2.
struct StageReward {
    double state_coef = 0.0;
    double control_coef = 0.0;
    double control_sq_coef = 0.0;

    double operator()(double x, double a) const noexcept {
        return state_coef * x + (control_coef + control_sq_coef * a) * a;
    }
};

/// Pass as x_total to disable slippage.
inline constexpr double kNoSlippage = std::numeric_limits<double>::infinity();

/// (1 + phi^2) / (2 phi): mid-price execution factor.
double mid_price_factor(double phi);

TraderDrift trader_drift(const TraderState& state, double alpha, double p, double phi,
                         double x_total);

LPState lp_state_step(const LPState& state, double alpha_lp, double p, double dt,
                      const LpNoise& noise, const LpVols& vols, double pool_x0);

double delta_rate(DeltaConvention convention, double lvr_rate, double mean_control);

/// Aggregates at grid index t_index. H uses left-endpoint sums over s < t_index.
MeanFieldAggregates mean_field_aggregates(std::span<const ControlLaw> q_flow,
                                          std::span<const double> lvr_rate_path,
                                          std::size_t t_index, double dt, double x_adj,
                                          double phi,
                                          DeltaConvention convention =
                                              DeltaConvention::DefinitionConsistent);

/// Exact time derivative of k0 / ((x_adj + phi D)(x_adj + D)) given
/// dx_adj/dt = alpha_lp and dD/dt = delta_rate.
double price_drift(double x_adj, double delta, double alpha_lp, double delta_rate, double phi,
                   double k0);

double trader_running_reward(double trader_x, const MeanFieldAggregates& agg, double alpha,
                             double lp_alpha, double x_adj, double phi, double k0,
                             double x_total, RewardForm form = RewardForm::DynamicsConsistent);

StageReward trader_reward_coefficients(const MeanFieldAggregates& agg, double lp_alpha,
                                       double x_adj, double phi, double k0, double x_total,
                                       RewardForm form = RewardForm::DynamicsConsistent);

double lp_running_reward(double lp_x, double alpha_lp, const MeanFieldAggregates& agg,
                         double x_adj, double phi, double k0);

double terminal_cost(double x, double c_terminal);

// Deterministic market environment along the grid, driven by a mean trader
// control path and an LP control path. State quantities (x_adj .. g) have
// steps + 1 entries; rates (mean_control .. lp_control) have steps.
struct MarketPath {
    std::vector<double> x_adj;
    std::vector<double> y_adj;
    std::vector<double> arb_impact;
    std::vector<double> trader_impact;
    std::vector<double> h;
    std::vector<double> price;
    std::vector<double> total_x;
    std::vector<double> invariant;
    std::vector<double> g;
    std::vector<double> mean_control;
    std::vector<double> lvr_rate;
    std::vector<double> delta_rate;
    std::vector<double> price_drift;
    std::vector<double> lp_control;

    MeanFieldAggregates aggregates(std::size_t n) const;
};

/// Left-endpoint recursion: l(P_n) is evaluated on the price implied by the
/// impact accumulated before step n. With params.coupling off the trader
/// control path is ignored.
MarketPath build_market_path(const ModelParams& params, const TimeGrid& grid,
                             std::span<const double> mean_control,
                             std::span<const double> lp_control);

/// Per-step trader reward coefficients along a market path.
std::vector<StageReward> trader_stage_rewards(const ModelParams& params, const MarketPath& market);

/// Piecewise-constant LP control over `segments` equal blocks of the grid.
std::vector<double> expand_lp_control(std::span<const double> segment_values,
                                      std::size_t steps);

} // namespace ammfg
