#pragma once

#include <cstddef>

namespace ammfg {

enum class ArbDirection {
    None,
    BuyEthFromPool, // pays USDT into the pool, sells the ETH externally at m_p
    SellEthToPool,  // buys ETH externally at m_p, sells it into the pool for USDT
};

// Amounts are always nonnegative; their meaning depends on direction.
//   BuyEthFromPool: delta_alpha = ETH out of pool, delta_beta = USDT into pool,
//                   profit = m_p * delta_alpha - delta_beta.
//   SellEthToPool:  delta_alpha = ETH into pool, delta_beta = USDT out of pool,
//                   profit = delta_beta - m_p * delta_alpha.
struct ArbSolution {
    double delta_alpha = 0.0;
    double delta_beta = 0.0;
    double profit = 0.0;
    ArbDirection direction = ArbDirection::None;

    bool active() const noexcept { return direction != ArbDirection::None; }
};

struct NoArbBand {
    double lower = 0.0;
    double upper = 0.0;

    bool contains(double price) const noexcept { return lower <= price && price <= upper; }
};

NoArbBand no_arb_band(double m_p, double tau);

/// Closed-form optimal arbitrage against reserves (r_alpha ETH, r_beta USDT)
/// with invariant k and fee fraction phi. Evaluates both trade directions and
/// returns the profitable one, or the inactive solution.
ArbSolution optimal_arbitrage(double r_alpha, double r_beta, double k, double m_p, double phi);

/// Profit of buying delta_alpha ETH from the pool and selling at m_p.
/// Defined for 0 <= delta_alpha < r_alpha.
double buy_side_objective(double delta_alpha, double r_alpha, double r_beta, double k,
                          double m_p, double phi);

/// Profit of selling delta_alpha ETH (bought at m_p) into the pool.
double sell_side_objective(double delta_alpha, double r_alpha, double r_beta, double k,
                           double m_p, double phi);

/// Grid search plus golden-section refinement of both directional objectives.
/// Independent of the closed form; used as its oracle.
ArbSolution brute_force_arbitrage(double r_alpha, double r_beta, double k, double m_p,
                                  double phi, std::size_t grid_points);

// Reserves (ETH, USDT) after executing a solution, before the fee leg is
// credited back. Their ratio is the marginal price the arbitrage targets.
struct PostTradeReserves {
    double x = 0.0;
    double y = 0.0;
};

PostTradeReserves execute_stage_one(const ArbSolution& sol, double r_alpha, double r_beta,
                                    double phi);

} // namespace ammfg
