#include "ammfg/arbitrage.hpp"

#include "ammfg/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ammfg {

namespace {

void validate(double r_alpha, double r_beta, double k, double m_p, double phi) {
    if (!(r_alpha > 0.0) || !(r_beta > 0.0) || !(k > 0.0)) {
        throw InvalidParameter("arbitrage: reserves and invariant must be positive");
    }
    if (!(m_p > 0.0)) {
        throw InvalidParameter("arbitrage: external price must be positive");
    }
    if (!(phi > 0.0 && phi <= 1.0)) {
        throw InvalidParameter("arbitrage: phi must lie in (0, 1]");
    }
}

struct SideOptimum {
    double amount = 0.0;
    double profit = 0.0;
};

// Maximizes a concave objective on [0, hi] (or [0, hi) when open_right):
// coarse grid first, then Brent/golden-section on the bracketing cell.
template <typename Objective>
SideOptimum maximize_on_grid(Objective&& objective, double hi, bool open_right,
                             std::size_t grid_points) {
    const double step = open_right ? hi / static_cast<double>(grid_points)
                                   : hi / static_cast<double>(grid_points - 1);
    std::size_t best = 0;
    double best_value = objective(0.0);
    for (std::size_t i = 1; i < grid_points; ++i) {
        const double value = objective(step * static_cast<double>(i));
        if (value > best_value) {
            best_value = value;
            best = i;
        }
    }
    const double lo_cell = best == 0 ? 0.0 : step * static_cast<double>(best - 1);
    double hi_cell = step * static_cast<double>(best + 1);
    if (open_right) {
        hi_cell = std::min(hi_cell, std::nextafter(hi, 0.0));
    } else {
        hi_cell = std::min(hi_cell, hi);
    }
    const auto refined = boost::math::tools::brent_find_minima(
        [&](double a) { return -objective(a); }, lo_cell, hi_cell,
        std::numeric_limits<double>::digits);
    SideOptimum out{step * static_cast<double>(best), best_value};
    if (-refined.second > out.profit) {
        out = SideOptimum{refined.first, -refined.second};
    }
    return out;
}

} // namespace

NoArbBand no_arb_band(double m_p, double tau) {
    if (!(m_p > 0.0)) {
        throw InvalidParameter("no_arb_band: external price must be positive");
    }
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw InvalidParameter("no_arb_band: tau must lie in [0, 1)");
    }
    return NoArbBand{(1.0 - tau) * m_p, (1.0 + tau) * m_p};
}

ArbSolution optimal_arbitrage(double r_alpha, double r_beta, double k, double m_p, double phi) {
    validate(r_alpha, r_beta, k, m_p, phi);

    // Buy ETH from the pool: active when phi * m_p exceeds the pool price.
    const double buy_alpha = r_alpha - std::sqrt(k / (phi * m_p));
    const double buy_beta = (std::sqrt(phi * m_p * k) - r_beta) / phi;
    if (buy_alpha > 0.0 && buy_beta > 0.0) {
        const double profit = m_p * buy_alpha - buy_beta;
        if (profit > 0.0) {
            return ArbSolution{buy_alpha, buy_beta, profit, ArbDirection::BuyEthFromPool};
        }
    }

    // Mirror image with the tokens swapped and external price 1 / m_p.
    const double sell_beta = r_beta - std::sqrt(k * m_p / phi);
    const double sell_alpha = (std::sqrt(phi * k / m_p) - r_alpha) / phi;
    if (sell_alpha > 0.0 && sell_beta > 0.0) {
        const double profit = sell_beta - m_p * sell_alpha;
        if (profit > 0.0) {
            return ArbSolution{sell_alpha, sell_beta, profit, ArbDirection::SellEthToPool};
        }
    }
    return ArbSolution{};
}

double buy_side_objective(double delta_alpha, double r_alpha, double r_beta, double k,
                          double m_p, double phi) {
    return m_p * delta_alpha - (k / (r_alpha - delta_alpha) - r_beta) / phi;
}

double sell_side_objective(double delta_alpha, double r_alpha, double r_beta, double k,
                           double m_p, double phi) {
    return r_beta - k / (r_alpha + phi * delta_alpha) - m_p * delta_alpha;
}

ArbSolution brute_force_arbitrage(double r_alpha, double r_beta, double k, double m_p,
                                  double phi, std::size_t grid_points) {
    validate(r_alpha, r_beta, k, m_p, phi);
    if (grid_points < 3) {
        throw InvalidParameter("brute_force_arbitrage: need at least 3 grid points");
    }

    const SideOptimum buy = maximize_on_grid(
        [&](double a) { return buy_side_objective(a, r_alpha, r_beta, k, m_p, phi); }, r_alpha,
        true, grid_points);
    // Selling more than r_beta / m_p ETH cannot be profitable.
    const SideOptimum sell = maximize_on_grid(
        [&](double a) { return sell_side_objective(a, r_alpha, r_beta, k, m_p, phi); },
        r_beta / m_p, false, grid_points);

    if (buy.profit > 0.0 && buy.profit >= sell.profit) {
        return ArbSolution{buy.amount, (k / (r_alpha - buy.amount) - r_beta) / phi, buy.profit,
                           ArbDirection::BuyEthFromPool};
    }
    if (sell.profit > 0.0) {
        return ArbSolution{sell.amount, r_beta - k / (r_alpha + phi * sell.amount), sell.profit,
                           ArbDirection::SellEthToPool};
    }
    return ArbSolution{};
}

PostTradeReserves execute_stage_one(const ArbSolution& sol, double r_alpha, double r_beta,
                                    double phi) {
    switch (sol.direction) {
    case ArbDirection::BuyEthFromPool:
        return {r_alpha - sol.delta_alpha, r_beta + phi * sol.delta_beta};
    case ArbDirection::SellEthToPool:
        return {r_alpha + phi * sol.delta_alpha, r_beta - sol.delta_beta};
    case ArbDirection::None:
        break;
    }
    return {r_alpha, r_beta};
}

} // namespace ammfg
