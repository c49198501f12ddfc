#include "ammfg/agents.hpp"

#include "ammfg/errors.hpp"
#include "ammfg/lvr.hpp"
#include "ammfg/pool.hpp"

#include <cmath>
#include <string>

namespace ammfg {

double ControlLaw::mean() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms) {
        m += a.value * a.weight;
    }
    return m;
}

void ControlLaw::validate(double lo, double hi) const {
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.weight >= 0.0)) {
            throw InvalidParameter("control law: negative weight");
        }
        if (a.value < lo || a.value > hi) {
            throw InvalidParameter("control law: atom outside the control set");
        }
        total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidParameter("control law: weights do not sum to 1");
    }
}

double mid_price_factor(double phi) { return (1.0 + phi * phi) / (2.0 * phi); }

TraderDrift trader_drift(const TraderState& /*state*/, double alpha, double p, double phi,
                         double x_total) {
    const double s = slippage(alpha, x_total);
    return TraderDrift{alpha, -alpha * (1.0 - s) * mid_price_factor(phi) * p};
}

LPState lp_state_step(const LPState& state, double alpha_lp, double p, double dt,
                      const LpNoise& noise, const LpVols& vols, double pool_x0) {
    if (!(dt > 0.0)) {
        throw InvalidParameter("lp_state_step: dt must be positive");
    }
    LPState next{
        state.x + alpha_lp * dt + vols.x * noise.dx,
        state.y + alpha_lp * p * dt + vols.y * noise.dy,
        state.z - 2.0 * alpha_lp * p * dt + vols.z * noise.dz,
        state.cumulative_control + alpha_lp * dt,
    };
    if (!(pool_x0 + next.cumulative_control > kReserveFloorFraction * pool_x0)) {
        throw DegenerateReserves("LP withdrawals empty the pool");
    }
    return next;
}

double delta_rate(DeltaConvention convention, double lvr_rate, double mean_control) {
    return convention == DeltaConvention::DefinitionConsistent ? lvr_rate - mean_control
                                                               : mean_control;
}

MeanFieldAggregates mean_field_aggregates(std::span<const ControlLaw> q_flow,
                                          std::span<const double> lvr_rate_path,
                                          std::size_t t_index, double dt, double x_adj,
                                          double phi, DeltaConvention convention) {
    if (t_index >= q_flow.size() || t_index >= lvr_rate_path.size()) {
        throw InvalidParameter("mean_field_aggregates: t_index outside the flow");
    }
    double h = 0.0;
    for (std::size_t s = 0; s < t_index; ++s) {
        h += lvr_rate_path[s] - q_flow[s].mean();
    }
    h *= dt;
    const double full_leg = x_adj + h;
    const double fee_leg = x_adj + phi * h;
    if (!(full_leg > 0.0) || !(fee_leg > 0.0)) {
        throw DegenerateReserves("mean_field_aggregates: reserve impact empties the pool");
    }
    MeanFieldAggregates agg;
    agg.mean_control = q_flow[t_index].mean();
    agg.lvr_rate = lvr_rate_path[t_index];
    agg.h_q = h;
    agg.g_factor = 1.0 / (full_leg * fee_leg);
    agg.delta_rate = delta_rate(convention, agg.lvr_rate, agg.mean_control);
    return agg;
}

double price_drift(double x_adj, double delta, double alpha_lp, double delta_rate, double phi,
                   double k0) {
    const double a = x_adj + phi * delta;
    const double b = x_adj + delta;
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DegenerateReserves("price_drift: price denominator is not positive");
    }
    const double da = alpha_lp + phi * delta_rate;
    const double db = alpha_lp + delta_rate;
    const double ab = a * b;
    return -k0 * (da * b + a * db) / (ab * ab);
}

namespace {

// -k0 x G^2 [2(a x_adj + phi H D') + (1 + phi)(x_adj D' + a H)]
double inventory_price_term(double x, const MeanFieldAggregates& agg, double alpha_lp,
                            double x_adj, double phi, double k0) {
    const double g = agg.g_factor;
    const double bracket =
        2.0 * (alpha_lp * x_adj + phi * agg.h_q * agg.delta_rate) +
        (1.0 + phi) * (x_adj * agg.delta_rate + alpha_lp * agg.h_q);
    return -k0 * x * g * g * bracket;
}

} // namespace

StageReward trader_reward_coefficients(const MeanFieldAggregates& agg, double lp_alpha,
                                       double x_adj, double phi, double k0, double x_total,
                                       RewardForm form) {
    const double p = k0 * agg.g_factor;
    const double c = mid_price_factor(phi);
    const double inv_x = 1.0 / x_total;
    if (!(x_total > 0.0)) {
        throw DegenerateReserves("trader reward: ETH reserve is not positive");
    }
    StageReward r;
    r.state_coef = inventory_price_term(1.0, agg, lp_alpha, x_adj, phi, k0);
    if (form == RewardForm::DynamicsConsistent) {
        // a P - a (1 - a/X) c P
        r.control_coef = p * (1.0 - c);
        r.control_sq_coef = c * p * inv_x;
    } else {
        // a P + a P (1 - a/X)(1 - c)
        r.control_coef = p * (2.0 - c);
        r.control_sq_coef = -p * (1.0 - c) * inv_x;
    }
    return r;
}

double trader_running_reward(double trader_x, const MeanFieldAggregates& agg, double alpha,
                             double lp_alpha, double x_adj, double phi, double k0,
                             double x_total, RewardForm form) {
    const double p = k0 * agg.g_factor;
    const double s = slippage(alpha, x_total);
    const double c = mid_price_factor(phi);
    const double price_term = inventory_price_term(trader_x, agg, lp_alpha, x_adj, phi, k0);
    if (form == RewardForm::DynamicsConsistent) {
        return price_term + alpha * p - alpha * (1.0 - s) * c * p;
    }
    return price_term + alpha * p + alpha * p * (1.0 - s) * (1.0 - c);
}

double lp_running_reward(double lp_x, double alpha_lp, const MeanFieldAggregates& agg,
                         double x_adj, double phi, double k0) {
    return inventory_price_term(lp_x, agg, alpha_lp, x_adj, phi, k0);
}

double terminal_cost(double x, double c_terminal) { return c_terminal * x * x; }

MeanFieldAggregates MarketPath::aggregates(std::size_t n) const {
    MeanFieldAggregates agg;
    agg.h_q = h[n];
    agg.g_factor = g[n];
    if (n < mean_control.size()) {
        agg.mean_control = mean_control[n];
        agg.lvr_rate = lvr_rate[n];
        agg.delta_rate = delta_rate[n];
    }
    return agg;
}

MarketPath build_market_path(const ModelParams& params, const TimeGrid& grid,
                             std::span<const double> mean_control,
                             std::span<const double> lp_control) {
    const std::size_t steps = grid.steps;
    if (mean_control.size() != steps || lp_control.size() != steps) {
        throw InvalidParameter("build_market_path: control paths must have one entry per step");
    }
    const double dt = grid.dt();
    const double phi = params.phi();
    const double k0 = params.k0();
    const double floor = kReserveFloorFraction * params.x0;

    MarketPath m;
    for (auto* v : {&m.x_adj, &m.y_adj, &m.arb_impact, &m.trader_impact, &m.h, &m.price,
                    &m.total_x, &m.invariant, &m.g}) {
        v->reserve(steps + 1);
    }
    for (auto* v : {&m.mean_control, &m.lvr_rate, &m.delta_rate, &m.price_drift, &m.lp_control}) {
        v->reserve(steps);
    }

    double lp_sum = 0.0;
    double lp_value_sum = 0.0;
    double arb = 0.0;
    double traded = 0.0;
    for (std::size_t n = 0;; ++n) {
        const double x_adj = params.x0 + lp_sum;
        const double y_adj = params.y0 + lp_value_sum;
        if (!(x_adj > floor) || !(y_adj > 0.0)) {
            throw DegenerateReserves("LP withdrawals empty the pool at step " + std::to_string(n));
        }
        const double h = arb - traded;
        const double total = total_eth_reserves({x_adj, y_adj, arb, traded});
        const double fee_leg = x_adj + phi * h;
        if (!(fee_leg > 0.0)) {
            throw DegenerateReserves("fee leg of the price equation is not positive at step " +
                                     std::to_string(n));
        }
        const double g = 1.0 / (total * fee_leg);
        const double p = k0 * g;
        const double k_t = post_trade_invariant(k0, x_adj, h, phi);

        m.x_adj.push_back(x_adj);
        m.y_adj.push_back(y_adj);
        m.arb_impact.push_back(arb);
        m.trader_impact.push_back(traded);
        m.h.push_back(h);
        m.price.push_back(p);
        m.total_x.push_back(total);
        m.invariant.push_back(k_t);
        m.g.push_back(g);
        if (n == steps) {
            break;
        }

        const double lvr = params.arbitrage ? instantaneous_lvr(p, params.external_sigma, k_t) : 0.0;
        const double mean_a = params.coupling ? mean_control[n] : 0.0;
        const double rate = delta_rate(params.delta_convention, lvr, mean_a);
        const double a_lp = lp_control[n];
        m.mean_control.push_back(mean_a);
        m.lvr_rate.push_back(lvr);
        m.delta_rate.push_back(rate);
        m.price_drift.push_back(price_drift(x_adj, h, a_lp, rate, phi, k0));
        m.lp_control.push_back(a_lp);

        lp_sum += a_lp * dt;
        lp_value_sum += a_lp * p * dt;
        arb += lvr * dt;
        traded += mean_a * dt;
    }
    return m;
}

std::vector<StageReward> trader_stage_rewards(const ModelParams& params, const MarketPath& market) {
    std::vector<StageReward> out;
    out.reserve(market.mean_control.size());
    for (std::size_t n = 0; n < market.mean_control.size(); ++n) {
        const double x_total = params.slippage ? market.total_x[n] : kNoSlippage;
        out.push_back(trader_reward_coefficients(market.aggregates(n), market.lp_control[n],
                                                 market.x_adj[n], params.phi(), params.k0(),
                                                 x_total, params.reward_form));
    }
    return out;
}

std::vector<double> expand_lp_control(std::span<const double> segment_values, std::size_t steps) {
    if (segment_values.empty()) {
        throw InvalidParameter("LP control needs at least one segment");
    }
    const std::size_t k = segment_values.size();
    std::vector<double> out(steps);
    for (std::size_t n = 0; n < steps; ++n) {
        out[n] = segment_values[n * k / steps];
    }
    return out;
}

} // namespace ammfg
