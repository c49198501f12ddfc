#include "ammfg/sde_engine.hpp"

#include "ammfg/errors.hpp"
#include "ammfg/lvr.hpp"
#include "ammfg/pool.hpp"
#include "ammfg/random.hpp"

#include <cmath>

namespace ammfg {

namespace {

std::vector<double> draw_increments(Rng rng, const TimeGrid& grid) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::sqrt(grid.dt());
    std::vector<double> out(grid.steps);
    for (auto& v : out) {
        v = scale * normal(rng);
    }
    return out;
}

void push_state(SystemTrajectory& tr, double t, double p, double model_p, double x_total,
                double k_t, double lvr, const LPState& lp) {
    tr.time.push_back(t);
    tr.price.push_back(p);
    tr.model_price.push_back(model_p);
    tr.reserve_x.push_back(x_total);
    tr.reserve_y.push_back(k_t / x_total);
    tr.invariant.push_back(k_t);
    tr.lvr.push_back(lvr);
    tr.lp_states.push_back(lp);
}

} // namespace

std::vector<double> make_trader_increments(std::uint64_t seed, std::uint64_t stream_id,
                                           const TimeGrid& grid) {
    return draw_increments(make_stream(seed, stream_id), grid);
}

NoiseBundle make_noise(std::uint64_t seed, const TimeGrid& grid, std::size_t n_traders) {
    validate(grid);
    NoiseBundle b;
    b.common = draw_increments(make_stream(seed, kCommonStream), grid);
    b.lp_x = draw_increments(make_stream(seed, kLpStreamBase), grid);
    b.lp_y = draw_increments(make_stream(seed, kLpStreamBase + 1), grid);
    b.lp_z = draw_increments(make_stream(seed, kLpStreamBase + 2), grid);
    b.idiosyncratic.reserve(n_traders);
    for (std::size_t i = 0; i < n_traders; ++i) {
        b.idiosyncratic.push_back(make_trader_increments(seed, kTraderStreamBase + i, grid));
    }
    return b;
}

double sample_initial_state(std::uint64_t seed, std::uint64_t stream_id,
                            std::span<const double> support, std::span<const double> weights) {
    if (support.empty() || support.size() != weights.size()) {
        throw InvalidParameter("initial law: support and weights must match");
    }
    Rng rng = make_stream(seed, kInitialStateStreamBase + stream_id);
    std::discrete_distribution<std::size_t> law(weights.begin(), weights.end());
    return support[law(rng)];
}

std::vector<double> sample_initial_states(std::uint64_t seed, std::span<const double> support,
                                          std::span<const double> weights, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = sample_initial_state(seed, i, support, weights);
    }
    return out;
}

SystemTrajectory simulate(const ModelParams& params, const TimeGrid& grid,
                          const PopulationPolicy& policy, std::span<const double> lp_control,
                          std::span<const double> initial_x, const NoiseBundle& noise,
                          const SimulationOptions& options) {
    validate(params);
    validate(grid);
    const std::size_t steps = grid.steps;
    const std::size_t n_traders = initial_x.size();
    if (lp_control.size() != steps) {
        throw InvalidParameter("simulate: LP control path needs one entry per step");
    }
    if (noise.common.size() != steps || noise.lp_x.size() != steps ||
        noise.lp_y.size() != steps || noise.lp_z.size() != steps ||
        noise.idiosyncratic.size() < n_traders) {
        throw InvalidParameter("simulate: noise bundle does not match the grid and population");
    }
    for (std::size_t i = 0; i < n_traders; ++i) {
        if (noise.idiosyncratic[i].size() != steps) {
            throw InvalidParameter("simulate: trader noise stream has the wrong length");
        }
    }

    const double dt = grid.dt();
    const double phi = params.phi();
    const double k0 = params.k0();
    const double floor = kReserveFloorFraction * params.x0;
    const LpVols vols{params.lp_sigma_x, params.lp_sigma_y, params.lp_sigma_z};

    SystemTrajectory tr;
    tr.traders_final.resize(n_traders);
    tr.trader_reward.assign(n_traders, 0.0);
    for (std::size_t i = 0; i < n_traders; ++i) {
        tr.traders_final[i].x = initial_x[i];
    }
    if (options.record_trader_paths) {
        tr.trader_x_paths.assign(n_traders, {});
        for (std::size_t i = 0; i < n_traders; ++i) {
            tr.trader_x_paths[i].reserve(steps + 1);
            tr.trader_x_paths[i].push_back(initial_x[i]);
        }
    }

    LPState lp{params.lp_initial_x, params.lp_initial_y, params.lp_initial_z, 0.0};
    double y_adj = params.y0;
    double arb = 0.0;
    double traded = 0.0;
    double lvr_total = 0.0;
    double lp_reward = 0.0;
    double price = params.y0 / params.x0;
    std::vector<double> controls(n_traders);

    std::size_t n = 0;
    std::string quantity = "reserves";
    try {
        for (;; ++n) {
            const double x_adj = params.x0 + lp.cumulative_control;
            quantity = "lp_adjusted_x";
            if (!(x_adj > floor) || !(y_adj > 0.0)) {
                throw DegenerateReserves("LP withdrawals empty the pool");
            }
            const double h = arb - traded;
            quantity = "total_x";
            const double total = total_eth_reserves({x_adj, y_adj, arb, traded});
            quantity = "fee_leg";
            const double fee_leg = x_adj + phi * h;
            if (!(fee_leg > 0.0)) {
                throw DegenerateReserves("fee leg of the price equation is not positive");
            }
            const double g = 1.0 / (total * fee_leg);
            const double k_t = post_trade_invariant(k0, x_adj, h, phi);
            push_state(tr, grid.time(n), price, k0 * g, total, k_t, lvr_total, lp);
            if (n == steps) {
                break;
            }

            const double lvr =
                params.arbitrage ? instantaneous_lvr(price, params.external_sigma, k_t) : 0.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < n_traders; ++i) {
                controls[i] = policy(i, n, tr.traders_final[i].x);
                sum += controls[i];
            }
            const double mean_a =
                params.coupling && n_traders > 0 ? sum / static_cast<double>(n_traders) : 0.0;
            const double rate = delta_rate(params.delta_convention, lvr, mean_a);
            const double a_lp = lp_control[n];
            quantity = "price_drift";
            const double drift = price_drift(x_adj, h, a_lp, rate, phi, k0);
            const MeanFieldAggregates agg{mean_a, lvr, h, g, rate};
            const double x_slip = params.slippage ? total : kNoSlippage;

            for (std::size_t i = 0; i < n_traders; ++i) {
                TraderState& s = tr.traders_final[i];
                tr.trader_reward[i] += dt * trader_running_reward(s.x, agg, controls[i], a_lp,
                                                                  x_adj, phi, k0, x_slip,
                                                                  params.reward_form);
                const TraderDrift d = trader_drift(s, controls[i], price, phi, x_slip);
                s.x += d.dx_rate * dt + params.trader_sigma * noise.idiosyncratic[i][n];
                s.y += d.dy_rate * dt;
                if (options.record_trader_paths) {
                    tr.trader_x_paths[i].push_back(s.x);
                }
            }
            lp_reward += dt * lp_running_reward(lp.x, a_lp, agg, x_adj, phi, k0);
            tr.lp_reward.push_back(lp_reward);
            quantity = "lp_state";
            lp = lp_state_step(lp, a_lp, price, dt, {noise.lp_x[n], noise.lp_y[n], noise.lp_z[n]},
                               vols, params.x0);
            y_adj += a_lp * price * dt;

            tr.mean_control.push_back(mean_a);
            tr.lvr_rate.push_back(lvr);
            price += drift * dt + params.common_sigma * noise.common[n];
            quantity = "price";
            if (!(price > 0.0)) {
                throw DegenerateReserves("price left the positive half-line");
            }
            lvr_total += lvr * dt;
            arb += lvr * dt;
            traded += mean_a * dt;
        }
    } catch (const DegenerateReserves& e) {
        tr.aborted = AbortRecord{n, quantity, e.what()};
    }
    return tr;
}

} // namespace ammfg
