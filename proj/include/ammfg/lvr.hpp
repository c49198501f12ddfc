#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ammfg {

/// Pool value 2*sqrt(k p): the cheapest (x, y) on xy = k at external price p.
double pool_value(double p, double k);

/// Pool ETH holdings sqrt(k / p) minimizing p*x + y on xy = k.
double optimal_holdings(double p, double k);

/// Loss-versus-rebalancing rate -(sigma^2 p^2 / 2) V''(p) = sigma^2 sqrt(k p) / 4.
double instantaneous_lvr(double p, double sigma, double k);

/// Left-point (Ito) replication increment x*(p_prev) * (p_next - p_prev).
double replication_increment(double p_prev, double p_next, double k);

/// LP inventory net of accumulated LVR.
double adjusted_lp_inventory(double v_lp, double lvr_t);

struct LvrExperimentSpec {
    double sigma = 0.2;
    double horizon = 1.0;
    std::size_t steps = 1000;
    std::size_t paths = 1000;
    double p0 = 1.0;
    double k = 10000.0;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

// Sampled accounts of one path, on steps + 1 grid points.
struct LvrAccount {
    std::vector<double> price_path;
    std::vector<double> pool_value_path;
    std::vector<double> replication_path;
    std::vector<double> lvr_path;
    double arb_gain = 0.0;
};

struct LvrPathSummary {
    double arb = 0.0;
    double lvr = 0.0;
    double pool_value_end = 0.0;
    double replication_end = 0.0;

    // V(P_T) - R_T + LVR_T, equal to LVR_T - ARB_T.
    double decomposition_residual() const noexcept {
        return pool_value_end - replication_end + lvr;
    }
};

struct LvrExperimentResult {
    LvrExperimentSpec spec;
    LvrAccount first_path;
    std::vector<LvrPathSummary> paths;
    double mean_gap = 0.0;       // mean of ARB_T - LVR_T
    double stderr_gap = 0.0;
    double mean_abs_gap = 0.0;   // mean of |ARB_T - LVR_T|
    double stderr_abs_gap = 0.0;
    double mean_lvr = 0.0;
};

/// Driftless GBM external price with exact log-normal steps; accumulates the
/// replication portfolio, LVR and arbitrage gains per path. Path i draws from
/// make_stream(seed, i); reductions run in path order.
LvrExperimentResult run_lvr_experiment(const LvrExperimentSpec& spec);

} // namespace ammfg
