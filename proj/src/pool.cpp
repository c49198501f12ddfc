#include "ammfg/pool.hpp"

#include "ammfg/errors.hpp"

#include <cmath>
#include <string>

namespace ammfg {

namespace {

void require_positive_factor(double value, const char* what) {
    if (!(value > 0.0)) {
        throw DegenerateReserves(std::string(what) + " must stay positive, got " +
                                 std::to_string(value));
    }
}

} // namespace

PoolState make_pool(double x_reserve, double y_reserve, double fee_tau) {
    if (!(x_reserve > 0.0) || !(y_reserve > 0.0)) {
        throw InvalidParameter("pool reserves must be positive");
    }
    if (!(fee_tau >= 0.0 && fee_tau < 1.0)) {
        throw InvalidParameter("pool fee must lie in [0, 1)");
    }
    return PoolState{x_reserve, y_reserve, x_reserve * y_reserve, fee_tau};
}

double spot_price(const PoolState& pool) { return pool.y_reserve / pool.x_reserve; }

double execution_price(double k0, double x_adj, double delta_x, double phi) {
    const double fee_leg = x_adj + phi * delta_x;
    const double full_leg = x_adj + delta_x;
    require_positive_factor(fee_leg, "x_adj + phi*delta_x");
    require_positive_factor(full_leg, "x_adj + delta_x");
    return k0 / (fee_leg * full_leg);
}

TradeQuote quote_trade(const PoolState& pool, double x_adj, double y_adj, double delta_x) {
    const double k0 = pool.invariant_k;
    const double phi = pool.phi();
    const double fee_leg = x_adj + phi * delta_x;
    require_positive_factor(fee_leg, "x_adj + phi*delta_x");
    require_positive_factor(x_adj + delta_x, "x_adj + delta_x");
    if (delta_x == 0.0) {
        return TradeQuote{0.0, k0};
    }
    const double y_after = k0 / fee_leg;
    require_positive_factor(y_after, "y_adj - delta_y");
    return TradeQuote{y_adj - y_after, post_trade_invariant(k0, x_adj, delta_x, phi)};
}

double post_trade_invariant(double k0, double x_adj, double delta_x, double phi) {
    const double fee_leg = x_adj + phi * delta_x;
    require_positive_factor(fee_leg, "x_adj + phi*delta_x");
    return (x_adj + delta_x) * k0 / fee_leg;
}

double slippage(double alpha, double x_total) {
    require_positive_factor(x_total, "ETH reserve");
    return alpha / x_total;
}

AdjustedReserves adjusted_reserves(std::span<const double> lp_control_path,
                                   std::span<const double> price_path,
                                   std::size_t t_index, double dt, double x0, double y0) {
    if (lp_control_path.size() < t_index || price_path.size() < t_index) {
        throw InvalidParameter("control and price paths must cover t_index samples");
    }
    if (!(dt > 0.0)) {
        throw InvalidParameter("dt must be positive");
    }
    double x_sum = 0.0;
    double y_sum = 0.0;
    for (std::size_t i = 0; i < t_index; ++i) {
        x_sum += lp_control_path[i];
        y_sum += lp_control_path[i] * price_path[i];
    }
    const AdjustedReserves out{x0 + dt * x_sum, y0 + dt * y_sum};
    const double floor = kReserveFloorFraction * x0;
    if (!(out.x > floor) || !(out.y > 0.0)) {
        throw DegenerateReserves("LP withdrawals empty the pool at grid index " +
                                 std::to_string(t_index));
    }
    return out;
}

double total_eth_reserves(const ReserveDecomposition& decomp) {
    const double total = decomp.lp_adjusted_x + decomp.arb_impact - decomp.trader_impact;
    if (!(total > 0.0)) {
        throw DegenerateReserves("total ETH reserve is not positive: " + std::to_string(total));
    }
    return total;
}

} // namespace ammfg
