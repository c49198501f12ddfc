#pragma once

#include <cstddef>
#include <span>

namespace ammfg {

// Constant-product pool. Amounts are ETH (x) and USDT (y).
struct PoolState {
    double x_reserve = 0.0;
    double y_reserve = 0.0;
    double invariant_k = 0.0;
    double fee_tau = 0.0;

    double phi() const noexcept { return 1.0 - fee_tau; }
};

// Validates reserves and fee and sets invariant_k = x * y.
PoolState make_pool(double x_reserve, double y_reserve, double fee_tau);

// ETH reserve split into its three sources:
// LP-adjusted equilibrium + arbitrage inflow - cumulative mean trader demand.
struct ReserveDecomposition {
    double lp_adjusted_x = 0.0;
    double lp_adjusted_y = 0.0;
    double arb_impact = 0.0;
    double trader_impact = 0.0;
};

struct TradeQuote {
    double delta_y = 0.0;       // USDT the pool pays out
    double new_invariant = 0.0; // invariant after fees are added back
};

struct AdjustedReserves {
    double x = 0.0;
    double y = 0.0;
};

/// Fraction of x0 below which any reserve counts as emptied.
inline constexpr double kReserveFloorFraction = 1e-9;

double spot_price(const PoolState& pool);

/// Two-stage fee price k0 / ((x_adj + phi*dx)(x_adj + dx)).
/// Throws DegenerateReserves if either factor is not positive.
double execution_price(double k0, double x_adj, double delta_x, double phi);

/// USDT paid for a (signed) ETH trade against the adjusted pool, and the
/// invariant after the fee leg is credited. Uses pool.invariant_k as k0 and
/// pool.phi() as the fee fraction.
TradeQuote quote_trade(const PoolState& pool, double x_adj, double y_adj, double delta_x);

/// Signed slippage alpha / x_total.
double slippage(double alpha, double x_total);

/// LP-adjusted reserves at grid index t_index using left-endpoint sums:
///   x = x0 + dt * sum_{i < t} a_i,   y = y0 + dt * sum_{i < t} a_i * p_i.
/// Both paths must hold at least t_index samples.
AdjustedReserves adjusted_reserves(std::span<const double> lp_control_path,
                                   std::span<const double> price_path,
                                   std::size_t t_index, double dt, double x0, double y0);

double total_eth_reserves(const ReserveDecomposition& decomp);

/// Invariant after a trade of delta_x against (x_adj, .) with base k0.
double post_trade_invariant(double k0, double x_adj, double delta_x, double phi);

} // namespace ammfg
