#include "ammfg/config.hpp"
#include "ammfg/errors.hpp"
#include "ammfg/nplayer.hpp"

#include <doctest.h>

#include <cmath>

using namespace ammfg;

namespace {

struct Fixture {
    MfgProblem problem;
    MfgSolution eq;

    explicit Fixture(const std::string& extra = "") {
        const SimConfig cfg = parse_config("grid.steps = 20\npool.x0 = 200\npool.y0 = 200\n" + extra);
        problem = mfg_problem(cfg);
        eq = solve_mfg(problem, solver_options(cfg));
    }
};

const Fixture& base_fixture() {
    static const Fixture f;
    return f;
}

} // namespace

TEST_CASE("single frozen player pays only the terminal cost") {
    const Fixture f("trader.sigma = 0\narbitrage.enabled = false\ntrader.control_min = 0\n"
                    "trader.control_max = 0\ntrader.control_points = 1\n");
    NPlayerOptions opt;
    opt.record_trader_paths = true;
    const auto run = simulate_n_players(1, f.eq.policy, f.problem, 5, opt);
    REQUIRE(run.objectives.size() == 1);
    const double x0 = run.trajectory.trader_x_paths[0].front();
    CHECK(run.trajectory.traders_final[0].x == x0);
    CHECK(run.objectives[0] == doctest::Approx(-x0 * x0).epsilon(1e-12));
}

TEST_CASE("players are exchangeable") {
    const auto& f = base_fixture();
    const auto a = simulate_n_players(4, f.eq.policy, f.problem, 11);
    NPlayerOptions perm;
    perm.player_streams = {2, 0, 3, 1};
    const auto b = simulate_n_players(4, f.eq.policy, f.problem, 11, perm);
    REQUIRE(a.objectives.size() == 4);
    REQUIRE(b.objectives.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(b.objectives[i] == doctest::Approx(a.objectives[perm.player_streams[i]]).epsilon(1e-10));
    }
    const auto again = simulate_n_players(4, f.eq.policy, f.problem, 11);
    CHECK(again.objectives == a.objectives);
    CHECK_THROWS_AS(simulate_n_players(0, f.eq.policy, f.problem, 1), InvalidParameter);
}

TEST_CASE("mean-field environment gives a vanishing gap") {
    const auto& f = base_fixture();
    NashOptions opt;
    opt.replications = 10;
    opt.environment = NashEnvironment::MeanField;
    const auto est = epsilon_nash_gap(8, f.problem, f.eq, 3, opt);
    CHECK(est.replications == 10);
    CHECK(std::abs(est.gap) <= 1e-5);
}

TEST_CASE("conditional gap is nonnegative and common random numbers reduce variance") {
    const auto& f = base_fixture();
    NashOptions opt;
    opt.replications = 24;
    const auto crn = epsilon_nash_gap(8, f.problem, f.eq, 3, opt);
    CHECK(crn.gap >= -3 * crn.std_error);
    for (double g : crn.samples) {
        CHECK(g >= -1e-12);
    }
    opt.common_random_numbers = false;
    const auto indep = epsilon_nash_gap(8, f.problem, f.eq, 3, opt);
    CHECK(crn.std_error < indep.std_error);

    opt.threads = 1;
    opt.common_random_numbers = true;
    const auto serial = epsilon_nash_gap(8, f.problem, f.eq, 3, opt);
    CHECK(serial.samples == crn.samples);
}

TEST_CASE("realized-path estimator runs") {
    const auto& f = base_fixture();
    NashOptions opt;
    opt.replications = 6;
    opt.estimator = NashEstimator::RealizedPath;
    const auto est = epsilon_nash_gap(4, f.problem, f.eq, 9, opt);
    CHECK(est.replications + est.dropped == 6);
    CHECK(std::isfinite(est.gap));
}

TEST_CASE("without interaction deviations gain nothing") {
    const Fixture f("model.coupling = false\n");
    NashOptions opt;
    opt.replications = 8;
    const auto est = epsilon_nash_gap(4, f.problem, f.eq, 2, opt);
    CHECK(std::abs(est.gap) <= 1e-9);
}

TEST_CASE("convergence study") {
    const auto& f = base_fixture();
    NashOptions opt;
    opt.replications = 12;
    const auto rep = convergence_study({4, 8, 16}, f.problem, f.eq, 1, opt);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.slope < 0.0);
    CHECK(rep.paths_per_estimate == 12);
    CHECK_THROWS_AS(convergence_study({8, 4}, f.problem, f.eq, 1, opt), InvalidParameter);
}

TEST_CASE("log-log slope") {
    CHECK(log_log_slope({1, 2, 4, 8}, {1, 0.5, 0.25, 0.125}) == doctest::Approx(-1.0));
    CHECK(log_log_slope({1, 2, 4}, {-1, 0.5, 0.25}) == doctest::Approx(-1.0));
    CHECK(std::isnan(log_log_slope({1, 2}, {1, -1})));
}
