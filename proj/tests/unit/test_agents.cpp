#include "ammfg/agents.hpp"
#include "ammfg/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace ammfg;

TEST_CASE("trader drift examples") {
    const TraderState s{};
    CHECK(trader_drift(s, 1, 100, 1.0, kNoSlippage).dy_rate == doctest::Approx(-100.0));
    CHECK(trader_drift(s, 1, 100, 0.997, kNoSlippage).dy_rate ==
          doctest::Approx(-100.0 * 1.994009 / 1.994).epsilon(1e-14));
    CHECK(trader_drift(s, 1, 100, 1.0, 100).dy_rate == doctest::Approx(-99.0));
    CHECK(trader_drift(s, 2.5, 100, 1.0, 100).dx_rate == 2.5);
    CHECK_THROWS_AS(trader_drift(s, 1, 100, 1.0, 0.0), DegenerateReserves);
}

TEST_CASE("LP state step") {
    const LPState s0{1, 2, 3, 0};
    const auto same = lp_state_step(s0, 0, 5, 0.1, {}, {}, 100);
    CHECK(same.x == 1.0);
    CHECK(same.y == 2.0);
    CHECK(same.z == 3.0);
    CHECK(same.cumulative_control == 0.0);

    const auto s1 = lp_state_step(LPState{}, 1, 2, 0.1, {}, {}, 100);
    CHECK(s1.x == doctest::Approx(0.1));
    CHECK(s1.y == doctest::Approx(0.2));
    CHECK(s1.z == doctest::Approx(-0.4));
    CHECK(s1.cumulative_control == doctest::Approx(0.1));

    for (double a : {-3.0, 0.5, 7.0}) {
        const auto s = lp_state_step(LPState{}, a, 1.7, 0.01, {}, {}, 100);
        CHECK(s.y / s.x == doctest::Approx(1.7).epsilon(1e-14));
        // increasing ETH inventory lowers the pool-share drift
        CHECK((a > 0) == (s.z < 0));
    }
    const auto noisy = lp_state_step(LPState{}, 0, 1, 0.1, {0.1, 0.2, 0.3}, {1, 2, 3}, 100);
    CHECK(noisy.x == doctest::Approx(0.1));
    CHECK(noisy.y == doctest::Approx(0.4));
    CHECK(noisy.z == doctest::Approx(0.9));
    CHECK_THROWS_AS(lp_state_step(LPState{}, -200, 1, 1.0, {}, {}, 100), DegenerateReserves);
    CHECK_THROWS_AS(lp_state_step(LPState{}, 0, 1, 0.0, {}, {}, 100), InvalidParameter);
}

TEST_CASE("mean-field aggregates") {
    const std::vector<double> no_lvr(10, 0.0);
    const std::vector<ControlLaw> zero(10, ControlLaw::point_mass(0.0));
    const auto a0 = mean_field_aggregates(zero, no_lvr, 7, 0.1, 100, 0.997);
    CHECK(a0.h_q == 0.0);
    CHECK(a0.g_factor == doctest::Approx(1e-4));

    const std::vector<ControlLaw> c(10, ControlLaw::point_mass(0.4));
    const auto ac = mean_field_aggregates(c, no_lvr, 5, 0.1, 100, 0.997);
    CHECK(ac.h_q == doctest::Approx(-0.4 * 0.5));
    CHECK(ac.mean_control == doctest::Approx(0.4));
    CHECK(ac.delta_rate == doctest::Approx(-0.4));
    const auto printed =
        mean_field_aggregates(c, no_lvr, 5, 0.1, 100, 0.997, DeltaConvention::AsPrinted);
    CHECK(printed.delta_rate == doctest::Approx(0.4));

    const ControlLaw law{{{-1, 0.25}, {0.5, 0.75}}};
    CHECK(law.mean() == doctest::Approx(0.125));
    CHECK_NOTHROW(law.validate(-1, 1));
    CHECK_THROWS_AS(law.validate(0, 1), InvalidParameter);
    CHECK_THROWS_AS((ControlLaw{{{0, 0.5}}}.validate(-1, 1)), InvalidParameter);

    const std::vector<ControlLaw> big(10, ControlLaw::point_mass(50.0));
    CHECK_THROWS_AS(mean_field_aggregates(big, no_lvr, 9, 1.0, 100, 0.997), DegenerateReserves);
}

TEST_CASE("price drift") {
    CHECK(price_drift(100, 3, 0, 0, 0.997, 10000) == 0.0);
    CHECK(price_drift(100, 0, 1, 0, 1.0, 10000) == doctest::Approx(-0.02).epsilon(1e-14));

    // central differences along a smooth path x_adj(t), D(t)
    const double k0 = 12000, phi = 0.997;
    const auto x = [](double t) { return 100 + 3 * std::sin(t); };
    const auto d = [](double t) { return -5 * t + t * t; };
    const auto price = [&](double t) { return k0 / ((x(t) + phi * d(t)) * (x(t) + d(t))); };
    const double t = 0.7;
    const double analytic = price_drift(x(t), d(t), 3 * std::cos(t), -5 + 2 * t, phi, k0);
    const double e1 = std::abs((price(t + 1e-2) - price(t - 1e-2)) / 2e-2 - analytic);
    const double e2 = std::abs((price(t + 1e-3) - price(t - 1e-3)) / 2e-3 - analytic);
    CHECK(e2 < 2e-2 * e1);
    CHECK(e2 <= 1e-8);
}

TEST_CASE("rewards equal noise-free inventory drifts") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double x_adj = 100 + 20 * u(rng);
        const double k0 = 10000 * (1.5 + u(rng));
        const double phi = 0.95 + 0.05 * std::abs(u(rng));
        MeanFieldAggregates agg;
        agg.h_q = 5 * u(rng);
        agg.mean_control = u(rng);
        agg.lvr_rate = std::abs(u(rng));
        agg.delta_rate = agg.lvr_rate - agg.mean_control;
        agg.g_factor = 1.0 / ((x_adj + agg.h_q) * (x_adj + phi * agg.h_q));
        const double a_lp = u(rng);
        const double alpha = u(rng);
        const double tx = 3 * u(rng);
        const double x_total = x_adj + agg.h_q;

        const double p = k0 * agg.g_factor;
        const double pdot = price_drift(x_adj, agg.h_q, a_lp, agg.delta_rate, phi, k0);
        const auto drift = trader_drift({tx, 0}, alpha, p, phi, x_total);
        // d(Y + X P) = dY + P dX + X dP
        const double expected = drift.dy_rate + p * drift.dx_rate + tx * pdot;
        const double f = trader_running_reward(tx, agg, alpha, a_lp, x_adj, phi, k0, x_total);
        CHECK(f == doctest::Approx(expected).epsilon(1e-8));

        const auto coef = trader_reward_coefficients(agg, a_lp, x_adj, phi, k0, x_total);
        CHECK(coef(tx, alpha) == doctest::Approx(f).epsilon(1e-10));
        for (auto form : {RewardForm::DynamicsConsistent, RewardForm::AsPrinted}) {
            const auto c2 = trader_reward_coefficients(agg, a_lp, x_adj, phi, k0, x_total, form);
            CHECK(c2(tx, alpha) ==
                  doctest::Approx(trader_running_reward(tx, agg, alpha, a_lp, x_adj, phi, k0,
                                                        x_total, form))
                      .epsilon(1e-10));
        }

        const double lx = 2 * u(rng);
        CHECK(lp_running_reward(lx, a_lp, agg, x_adj, phi, k0) ==
              doctest::Approx(lx * pdot).epsilon(1e-10));
    }
}

TEST_CASE("reward trivial cases") {
    MeanFieldAggregates agg;
    agg.g_factor = 1e-4;
    CHECK(trader_running_reward(0, agg, 0, 0, 100, 0.997, 10000, 100) == 0.0);
    // phi = 1 without slippage: trading at the mid price earns nothing
    CHECK(trader_running_reward(0, agg, 0.7, 0, 100, 1.0, 10000, kNoSlippage) ==
          doctest::Approx(0.0));
    CHECK(lp_running_reward(1, 0, agg, 100, 0.997, 10000) == 0.0);
    CHECK(lp_running_reward(0, 2, agg, 100, 0.997, 10000) == 0.0);
    CHECK(terminal_cost(0, 3) == 0.0);
    CHECK(terminal_cost(2, 0.5) == 2.0);
    CHECK(terminal_cost(5, 0) == 0.0);
}

TEST_CASE("market path price follows its drift") {
    ModelParams params;
    params.tau = 0.003;
    const TimeGrid grid{1.0, 2000};
    std::vector<double> mean(grid.steps), lp(grid.steps);
    for (std::size_t n = 0; n < grid.steps; ++n) {
        mean[n] = 0.5 * std::sin(3 * grid.time(n));
        lp[n] = n < grid.steps / 2 ? 1.0 : -0.5;
    }
    const auto m = build_market_path(params, grid, mean, lp);
    REQUIRE(m.price.size() == grid.steps + 1);
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const double fd = (m.price[n + 1] - m.price[n]) / grid.dt();
        worst = std::max(worst, std::abs(fd - m.price_drift[n]));
        CHECK(m.total_x[n] == doctest::Approx(m.x_adj[n] + m.h[n]));
        CHECK(m.invariant[n] >= params.k0() * (1 - 1e-15));
    }
    CHECK(worst < 1e-3);
    CHECK(m.price[0] == doctest::Approx(1.0));

    params.coupling = false;
    const auto frozen = build_market_path(params, grid, mean, std::vector<double>(grid.steps));
    for (double a : frozen.mean_control) {
        CHECK(a == 0.0);
    }
}

TEST_CASE("piecewise-constant LP control") {
    const std::vector<double> seg{1, 2, 3, 4};
    const auto c = expand_lp_control(seg, 8);
    CHECK(c == std::vector<double>{1, 1, 2, 2, 3, 3, 4, 4});
    CHECK(expand_lp_control(seg, 10).size() == 10);
    CHECK_THROWS_AS(expand_lp_control({}, 10), InvalidParameter);
}
