#include "ammfg/lvr.hpp"

#include "ammfg/errors.hpp"
#include "ammfg/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ammfg {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) {
        throw InvalidParameter(std::string(what) + " must be positive");
    }
}

LvrPathSummary run_path(const LvrExperimentSpec& spec, std::size_t index, LvrAccount* record) {
    Rng rng = make_stream(spec.seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double dt = spec.horizon / static_cast<double>(spec.steps);
    const double drift = -0.5 * spec.sigma * spec.sigma * dt;
    const double vol = spec.sigma * std::sqrt(dt);
    const double sqrt_k = std::sqrt(spec.k);
    const double lvr_scale = 0.25 * spec.sigma * spec.sigma * sqrt_k;

    double p = spec.p0;
    double replication = pool_value(p, spec.k);
    double lvr = 0.0;
    if (record != nullptr) {
        record->price_path.assign(1, p);
        record->pool_value_path.assign(1, replication);
        record->replication_path.assign(1, replication);
        record->lvr_path.assign(1, 0.0);
    }
    for (std::size_t i = 0; i < spec.steps; ++i) {
        const double root_p = std::sqrt(p);
        const double holdings = sqrt_k / root_p;
        const double p_next = p * std::exp(drift + vol * normal(rng));
        replication += holdings * (p_next - p);
        lvr += lvr_scale * root_p * dt;
        p = p_next;
        if (record != nullptr) {
            record->price_path.push_back(p);
            record->pool_value_path.push_back(pool_value(p, spec.k));
            record->replication_path.push_back(replication);
            record->lvr_path.push_back(lvr);
        }
    }
    const double value_end = pool_value(p, spec.k);
    if (record != nullptr) {
        record->arb_gain = replication - value_end;
    }
    return LvrPathSummary{replication - value_end, lvr, value_end, replication};
}

} // namespace

double pool_value(double p, double k) {
    require_positive(p, "price");
    require_positive(k, "invariant");
    return 2.0 * std::sqrt(k * p);
}

double optimal_holdings(double p, double k) {
    require_positive(p, "price");
    require_positive(k, "invariant");
    return std::sqrt(k / p);
}

double instantaneous_lvr(double p, double sigma, double k) {
    require_positive(p, "price");
    require_positive(k, "invariant");
    if (!(sigma >= 0.0)) {
        throw InvalidParameter("volatility must be nonnegative");
    }
    return 0.25 * sigma * sigma * std::sqrt(k * p);
}

double replication_increment(double p_prev, double p_next, double k) {
    require_positive(p_next, "price");
    return optimal_holdings(p_prev, k) * (p_next - p_prev);
}

double adjusted_lp_inventory(double v_lp, double lvr_t) { return v_lp - lvr_t; }

LvrExperimentResult run_lvr_experiment(const LvrExperimentSpec& spec) {
    if (!(spec.sigma >= 0.0)) {
        throw InvalidParameter("lvr experiment: sigma must be nonnegative");
    }
    require_positive(spec.horizon, "lvr experiment horizon");
    require_positive(spec.p0, "lvr experiment initial price");
    require_positive(spec.k, "lvr experiment invariant");
    if (spec.steps == 0 || spec.paths == 0) {
        throw InvalidParameter("lvr experiment needs at least one step and one path");
    }

    LvrExperimentResult out;
    out.spec = spec;
    out.paths.resize(spec.paths);
    parallel_for(
        spec.paths,
        [&](std::size_t i) {
            out.paths[i] = run_path(spec, i, i == 0 ? &out.first_path : nullptr);
        },
        spec.threads);

    const double n = static_cast<double>(spec.paths);
    double sum = 0.0, abs_sum = 0.0, lvr_sum = 0.0;
    for (const auto& p : out.paths) {
        sum += p.arb - p.lvr;
        abs_sum += std::abs(p.arb - p.lvr);
        lvr_sum += p.lvr;
    }
    out.mean_gap = sum / n;
    out.mean_abs_gap = abs_sum / n;
    out.mean_lvr = lvr_sum / n;
    if (spec.paths > 1) {
        double ss = 0.0, ss_abs = 0.0;
        for (const auto& p : out.paths) {
            const double gap = p.arb - p.lvr;
            ss += (gap - out.mean_gap) * (gap - out.mean_gap);
            ss_abs += (std::abs(gap) - out.mean_abs_gap) * (std::abs(gap) - out.mean_abs_gap);
        }
        out.stderr_gap = std::sqrt(ss / (n - 1.0) / n);
        out.stderr_abs_gap = std::sqrt(ss_abs / (n - 1.0) / n);
    }
    return out;
}

} // namespace ammfg
