#include "ammfg/errors.hpp"
#include "ammfg/lvr.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>

using namespace ammfg;

namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

// Central second difference of the pool value in 50-digit arithmetic.
double second_difference(double p, double k, double h) {
    const auto v = [&](const Wide& x) { return 2 * sqrt(Wide(k) * x); };
    const Wide wp(p), wh(h);
    return static_cast<double>((v(wp + wh) - 2 * v(wp) + v(wp - wh)) / (wh * wh));
}

} // namespace

TEST_CASE("pool value") {
    CHECK(pool_value(1, 10000) == doctest::Approx(200.0));
    CHECK(pool_value(4, 10000) == doctest::Approx(400.0));
    CHECK_THROWS_AS(pool_value(0, 1), InvalidParameter);

    // grid minimum of P x + k / x
    const double p = 2.5, k = 900;
    double best = std::numeric_limits<double>::infinity();
    double arg = 0;
    for (int i = 1; i <= 200000; ++i) {
        const double x = 1e-3 * i;
        const double v = p * x + k / x;
        if (v < best) {
            best = v;
            arg = x;
        }
    }
    CHECK(best == doctest::Approx(pool_value(p, k)).epsilon(1e-8));
    CHECK(std::abs(arg - optimal_holdings(p, k)) <= 1e-3);
}

TEST_CASE("instantaneous LVR") {
    CHECK(instantaneous_lvr(1, 0, 10000) == 0.0);
    CHECK(instantaneous_lvr(1, 0.2, 10000) == doctest::Approx(1.0).epsilon(1e-14));
    for (double p : {0.1, 1.0, 7.0}) {
        for (double k : {1.0, 1e4, 3e6}) {
            CHECK(instantaneous_lvr(p, 0.3, k) ==
                  doctest::Approx(0.09 * pool_value(p, k) / 8).epsilon(1e-14));
        }
    }
    CHECK(instantaneous_lvr(1, 0.3, 100) > instantaneous_lvr(1, 0.2, 100));
    CHECK(instantaneous_lvr(2, 0.2, 100) > instantaneous_lvr(1, 0.2, 100));
    CHECK(instantaneous_lvr(1, 0.2, 200) > instantaneous_lvr(1, 0.2, 100));
}

TEST_CASE("finite-difference LVR converges at second order") {
    const double sigma = 0.2, p = 1.3, k = 10000;
    const double exact = instantaneous_lvr(p, sigma, k);
    const auto fd = [&](double h) { return -0.5 * sigma * sigma * p * p * second_difference(p, k, h); };
    CHECK(second_difference(p, k, 1e-3) < 0.0);
    const double e1 = std::abs(fd(1e-3) - exact);
    const double e2 = std::abs(fd(1e-4) - exact);
    CHECK(e2 < e1);
    CHECK(e1 / e2 == doctest::Approx(100.0).epsilon(0.2));
}

TEST_CASE("replication increment and adjusted inventory") {
    CHECK(replication_increment(2, 2, 100) == 0.0);
    CHECK(replication_increment(1, 1.01, 10000) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(adjusted_lp_inventory(7, 0) == 7.0);
    CHECK(adjusted_lp_inventory(100, 1.5) == doctest::Approx(98.5));
}

TEST_CASE("frozen price experiment") {
    LvrExperimentSpec spec;
    spec.sigma = 0.0;
    spec.steps = 50;
    spec.paths = 10;
    const auto r = run_lvr_experiment(spec);
    CHECK(r.mean_lvr == 0.0);
    for (const auto& s : r.paths) {
        CHECK(s.arb == doctest::Approx(0.0));
        CHECK(s.replication_end == doctest::Approx(pool_value(spec.p0, spec.k)));
    }
}

TEST_CASE("experiment accounts and determinism") {
    LvrExperimentSpec spec;
    spec.steps = 200;
    spec.paths = 64;
    spec.seed = 5;
    const auto a = run_lvr_experiment(spec);
    const auto& acc = a.first_path;
    REQUIRE(acc.lvr_path.size() == spec.steps + 1);
    for (std::size_t i = 1; i < acc.lvr_path.size(); ++i) {
        CHECK(acc.lvr_path[i] >= acc.lvr_path[i - 1]);
    }
    const double residual = acc.pool_value_path.back() - acc.replication_path.back() +
                            acc.lvr_path.back();
    CHECK(std::abs(residual) < 0.5);
    for (const auto& s : a.paths) {
        CHECK(s.decomposition_residual() == doctest::Approx(s.lvr - s.arb).epsilon(1e-9));
    }

    spec.threads = 1;
    const auto b = run_lvr_experiment(spec);
    CHECK(a.mean_gap == b.mean_gap);
    CHECK(a.mean_abs_gap == b.mean_abs_gap);
}

TEST_CASE("gap shrinks with dt") {
    LvrExperimentSpec spec;
    spec.paths = 400;
    spec.steps = 10;
    const double coarse = run_lvr_experiment(spec).mean_abs_gap;
    spec.steps = 1000;
    const double fine = run_lvr_experiment(spec).mean_abs_gap;
    CHECK(fine * 5 < coarse);
}
