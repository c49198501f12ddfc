#include "ammfg/nplayer.hpp"

#include "ammfg/errors.hpp"
#include "ammfg/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace ammfg {

namespace {

std::vector<double> state_nodes(const UniformGrid& g) {
    std::vector<double> out(g.points);
    for (std::size_t j = 0; j < g.points; ++j) {
        out[j] = g.at(j);
    }
    return out;
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t n, std::size_t r) {
    Rng rng = make_stream(seed, (static_cast<std::uint64_t>(n) << 32) | r);
    return rng();
}

} // namespace

NPlayerRun simulate_n_players(std::size_t n, const PolicyGrid& policy, const MfgProblem& problem,
                              std::uint64_t seed, const NPlayerOptions& options) {
    if (n == 0) {
        throw InvalidParameter("simulate_n_players: need at least one player");
    }
    if (!options.player_streams.empty() && options.player_streams.size() != n) {
        throw InvalidParameter("simulate_n_players: one stream index per player");
    }
    validate(problem);
    auto stream = [&](std::size_t i) {
        return options.player_streams.empty() ? static_cast<std::uint64_t>(i)
                                              : options.player_streams[i];
    };

    NoiseBundle noise = make_noise(seed, problem.time, 0);
    const std::vector<double> support = state_nodes(problem.states);
    std::vector<double> initial(n);
    for (std::size_t i = 0; i < n; ++i) {
        noise.idiosyncratic.push_back(
            make_trader_increments(seed, kTraderStreamBase + stream(i), problem.time));
        initial[i] = sample_initial_state(seed, stream(i), support, problem.initial_law);
    }

    const PolicyGrid* deviator = options.deviator_policy;
    PopulationPolicy rule = [&](std::size_t player, std::size_t step, double x) {
        const PolicyGrid& p = (player == 0 && deviator != nullptr) ? *deviator : policy;
        return p.control_at(step, x);
    };

    NPlayerRun run;
    run.trajectory = simulate(problem.params, problem.time, rule, problem.lp_control, initial, noise,
                              {options.record_trader_paths});
    if (run.trajectory.aborted) {
        run.dropped = 1;
        return run;
    }
    run.objectives.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        run.objectives[i] =
            run.trajectory.trader_reward[i] -
            terminal_cost(run.trajectory.traders_final[i].x, problem.params.trader_terminal_weight);
    }
    return run;
}

NashEstimate epsilon_nash_gap(std::size_t n, const MfgProblem& problem,
                              const MfgSolution& equilibrium, std::uint64_t seed,
                              const NashOptions& options) {
    if (n == 0 || options.replications == 0) {
        throw InvalidParameter("epsilon_nash_gap: need n >= 1 and at least one replication");
    }
    const std::size_t reps = options.replications;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> gaps(reps, nan);

    std::optional<PolicyGrid> mean_field_response;
    if (options.environment == NashEnvironment::MeanField) {
        mean_field_response = best_response(trader_problem(problem, equilibrium.market));
    }

    const std::vector<double> support = state_nodes(problem.states);
    parallel_for(
        reps,
        [&](std::size_t r) {
            const std::uint64_t rep_seed = replication_seed(seed, n, r);
            const std::uint64_t other_seed =
                options.common_random_numbers ? rep_seed : make_stream(rep_seed, 1)();
            const NPlayerRun pilot = simulate_n_players(n, equilibrium.policy, problem, rep_seed);
            if (pilot.dropped != 0) {
                return;
            }
            const TraderProblem env =
                mean_field_response ? trader_problem(problem, equilibrium.market)
                                    : trader_problem(problem, pilot.trajectory.mean_control);
            const PolicyGrid response =
                mean_field_response ? *mean_field_response : best_response(env);

            if (options.estimator == NashEstimator::ConditionalValue) {
                const double x_start = sample_initial_state(rep_seed, 0, support, problem.initial_law);
                const std::size_t j = static_cast<std::size_t>(
                    std::lround((x_start - problem.states.lo) / problem.states.spacing()));
                double eq_value = 0.0;
                if (options.common_random_numbers || mean_field_response) {
                    eq_value = policy_value(env, equilibrium.policy)[j];
                } else {
                    const NPlayerRun other =
                        simulate_n_players(n, equilibrium.policy, problem, other_seed);
                    if (other.dropped != 0) {
                        return;
                    }
                    eq_value = policy_value(trader_problem(problem, other.trajectory.mean_control),
                                            equilibrium.policy)[j];
                }
                gaps[r] = response.value_at(0, j) - eq_value;
                return;
            }

            NPlayerOptions dev;
            dev.deviator_policy = &response;
            double base = pilot.objectives[0];
            if (!options.common_random_numbers) {
                const NPlayerRun other =
                    simulate_n_players(n, equilibrium.policy, problem, other_seed);
                if (other.dropped != 0) {
                    return;
                }
                base = other.objectives[0];
            }
            const NPlayerRun deviation =
                simulate_n_players(n, equilibrium.policy, problem, rep_seed, dev);
            if (deviation.dropped != 0) {
                return;
            }
            gaps[r] = deviation.objectives[0] - base;
        },
        options.threads);

    NashEstimate est;
    est.n = n;
    double sum = 0.0;
    for (double g : gaps) {
        if (std::isnan(g)) {
            ++est.dropped;
            continue;
        }
        est.samples.push_back(g);
        sum += g;
    }
    est.replications = est.samples.size();
    if (est.replications == 0) {
        est.gap = nan;
        est.std_error = nan;
        return est;
    }
    const double count = static_cast<double>(est.replications);
    est.gap = sum / count;
    double ss = 0.0;
    for (double g : est.samples) {
        ss += (g - est.gap) * (g - est.gap);
    }
    est.std_error = est.replications > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
    return est;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double m = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

NashReport convergence_study(const std::vector<std::size_t>& n_list, const MfgProblem& problem,
                             const MfgSolution& equilibrium, std::uint64_t seed,
                             const NashOptions& options) {
    if (n_list.empty()) {
        throw InvalidParameter("convergence_study: empty N list");
    }
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] == 0 || (i > 0 && n_list[i] <= n_list[i - 1])) {
            throw InvalidParameter("convergence_study: N list must be positive and ascending");
        }
    }
    NashReport report;
    report.paths_per_estimate = options.replications;
    report.seed = seed;
    std::vector<double> ns, gaps;
    for (std::size_t n : n_list) {
        report.rows.push_back(epsilon_nash_gap(n, problem, equilibrium, seed, options));
        ns.push_back(static_cast<double>(n));
        gaps.push_back(report.rows.back().gap);
    }
    report.slope = log_log_slope(ns, gaps);
    return report;
}

} // namespace ammfg
