#include "ammfg/mfg_solver.hpp"

#include "ammfg/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ammfg {

namespace {

struct Bracket {
    std::size_t i = 0;
    double theta = 0.0;
    double outside = 0.0; // distance beyond the grid, in grid spacings
};

Bracket locate(const UniformGrid& g, double x) {
    const double h = g.spacing();
    double u = (x - g.lo) / h;
    const double last = static_cast<double>(g.points - 1);
    Bracket b;
    if (u < 0.0) {
        b.outside = -u;
        u = 0.0;
    } else if (u > last) {
        b.outside = u - last;
        u = last;
    }
    auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= g.points - 1) {
        i = g.points - 2;
    }
    b.i = i;
    b.theta = u - static_cast<double>(i);
    return b;
}

double interpolate(std::span<const double> values, const Bracket& b) {
    return values[b.i] * (1.0 - b.theta) + values[b.i + 1] * b.theta;
}

void validate(const TraderProblem& p) {
    validate(p.time);
    validate(p.states, "state grid");
    if (p.states.points < 2) {
        throw InvalidParameter("state grid needs at least two points");
    }
    if (p.controls.empty()) {
        throw InvalidParameter("control set is empty");
    }
    if (p.stages.size() != p.time.steps) {
        throw InvalidParameter("trader problem needs one stage reward per step");
    }
    if (!(p.sigma >= 0.0) || !(p.terminal_weight >= 0.0) || p.noise_nodes == 0) {
        throw InvalidParameter("trader problem: invalid noise or terminal weight");
    }
}

std::size_t nearest_atom(std::span<const double> atoms, double value) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < atoms.size(); ++i) {
        if (std::abs(atoms[i] - value) < std::abs(atoms[best] - value)) {
            best = i;
        }
    }
    return best;
}

} // namespace

GaussHermite gauss_hermite(std::size_t n) {
    if (n == 0) {
        throw InvalidParameter("Gauss-Hermite rule needs at least one node");
    }
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        const double off = std::sqrt(static_cast<double>(i));
        jacobi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = off;
        jacobi(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermite rule;
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        double node = solver.eigenvalues()(idx);
        if (n % 2 == 1 && i == n / 2) {
            node = 0.0;
        }
        const double v = solver.eigenvectors()(0, idx);
        rule.nodes.push_back(node);
        rule.weights.push_back(v * v);
    }
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (auto& w : rule.weights) {
        w /= total;
    }
    return rule;
}

double PolicyGrid::control_at(std::size_t n, double x) const {
    const double h = states.spacing();
    const double u = std::clamp((x - states.lo) / h, 0.0, static_cast<double>(states.points - 1));
    return control(n, static_cast<std::size_t>(std::lround(u)));
}

namespace {

GaussHermite noise_rule(const TraderProblem& problem) {
    return gauss_hermite(problem.sigma > 0.0 ? problem.noise_nodes : 1);
}

double lookahead(const TraderProblem& problem, const GaussHermite& rule,
                 std::span<const double> next_value, std::size_t n, std::size_t j, double a) {
    const double dt = problem.time.dt();
    const double x = problem.states.at(j);
    const double spread = problem.sigma * std::sqrt(dt);
    double cont = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        cont += rule.weights[k] *
                interpolate(next_value, locate(problem.states, x + a * dt + spread * rule.nodes[k]));
    }
    return dt * problem.stages[n](x, a) + cont;
}

} // namespace

double lookahead_value(const TraderProblem& problem, std::span<const double> next_value,
                       std::size_t n, std::size_t j, double a) {
    return lookahead(problem, noise_rule(problem), next_value, n, j, a);
}

PolicyGrid best_response(const TraderProblem& problem) {
    validate(problem);
    const std::size_t steps = problem.time.steps;
    const std::size_t points = problem.states.points;
    const std::size_t n_controls = problem.controls.size();
    const double dt = problem.time.dt();
    const GaussHermite rule = noise_rule(problem);
    const double spread = problem.sigma * std::sqrt(dt);

    double max_move = 0.0;
    for (double a : problem.controls) {
        max_move = std::max(max_move, std::abs(a) * dt);
    }
    max_move += spread * (rule.nodes.empty() ? 0.0 : std::abs(rule.nodes.back()));
    if (max_move >= problem.states.hi - problem.states.lo) {
        throw GridOverflow("one time step can cross the whole state grid");
    }

    PolicyGrid out;
    out.time = problem.time;
    out.states = problem.states;
    out.controls = problem.controls;
    out.policy.assign(steps * points, 0);
    out.value.assign((steps + 1) * points, 0.0);
    for (std::size_t j = 0; j < points; ++j) {
        out.value[steps * points + j] = -terminal_cost(problem.states.at(j), problem.terminal_weight);
    }

    // Brackets depend on (j, a, k) only.
    std::vector<Bracket> brackets(points * n_controls * rule.nodes.size());
    for (std::size_t j = 0; j < points; ++j) {
        const double x = problem.states.at(j);
        for (std::size_t c = 0; c < n_controls; ++c) {
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                brackets[(j * n_controls + c) * rule.nodes.size() + k] =
                    locate(problem.states, x + problem.controls[c] * dt + spread * rule.nodes[k]);
            }
        }
    }

    for (std::size_t n = steps; n-- > 0;) {
        const std::span<const double> next(out.value.data() + (n + 1) * points, points);
        const StageReward& stage = problem.stages[n];
        for (std::size_t j = 0; j < points; ++j) {
            const double x = problem.states.at(j);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < n_controls; ++c) {
                double cont = 0.0;
                for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                    cont += rule.weights[k] *
                            interpolate(next, brackets[(j * n_controls + c) * rule.nodes.size() + k]);
                }
                const double v = dt * stage(x, problem.controls[c]) + cont;
                if (v > best) {
                    best = v;
                    best_c = c;
                }
            }
            out.policy[n * points + j] = best_c;
            out.value[n * points + j] = best;
        }
    }
    return out;
}

double bellman_residual(const PolicyGrid& policy, const TraderProblem& problem) {
    validate(problem);
    const GaussHermite rule = noise_rule(problem);
    const std::size_t points = problem.states.points;
    double worst = 0.0;
    for (std::size_t j = 0; j < points; ++j) {
        const double expected = -terminal_cost(problem.states.at(j), problem.terminal_weight);
        worst = std::max(worst, std::abs(policy.value_at(problem.time.steps, j) - expected));
    }
    for (std::size_t n = 0; n < problem.time.steps; ++n) {
        const std::span<const double> next(policy.value.data() + (n + 1) * points, points);
        for (std::size_t j = 0; j < points; ++j) {
            const double v = policy.value_at(n, j);
            const double chosen = lookahead(problem, rule, next, n, j, policy.control(n, j));
            worst = std::max(worst, std::abs(chosen - v));
            for (double a : problem.controls) {
                worst = std::max(worst, lookahead(problem, rule, next, n, j, a) - v);
            }
        }
    }
    return worst;
}

std::vector<double> policy_value(const TraderProblem& problem, const PolicyGrid& policy) {
    validate(problem);
    const std::size_t steps = problem.time.steps;
    const std::size_t points = problem.states.points;
    if (policy.policy.size() != steps * points || policy.controls != problem.controls) {
        throw InvalidParameter("policy_value: policy does not match the problem grids");
    }
    const GaussHermite rule = noise_rule(problem);
    std::vector<double> value((steps + 1) * points);
    for (std::size_t j = 0; j < points; ++j) {
        value[steps * points + j] = -terminal_cost(problem.states.at(j), problem.terminal_weight);
    }
    for (std::size_t n = steps; n-- > 0;) {
        const std::span<const double> next(value.data() + (n + 1) * points, points);
        for (std::size_t j = 0; j < points; ++j) {
            value[n * points + j] = lookahead(problem, rule, next, n, j, policy.control(n, j));
        }
    }
    return value;
}

std::vector<double> FlowOfMeasures::mean_controls() const {
    std::vector<double> out;
    out.reserve(q.size());
    for (const auto& slice : q) {
        double m = 0.0;
        for (std::size_t c = 0; c < slice.size(); ++c) {
            m += controls[c] * slice[c];
        }
        out.push_back(m);
    }
    return out;
}

ControlLaw FlowOfMeasures::control_law(std::size_t n) const {
    ControlLaw law;
    for (std::size_t c = 0; c < controls.size(); ++c) {
        law.atoms.push_back({controls[c], q[n][c]});
    }
    return law;
}

FlowOfMeasures induced_flows(const PolicyGrid& policy, std::span<const double> initial_law,
                             const NoiseQuadrature& noise, double overflow_tol) {
    const UniformGrid& g = policy.states;
    const std::size_t points = g.points;
    const std::size_t steps = policy.time.steps;
    if (initial_law.size() != points) {
        throw InvalidParameter("initial law must have one weight per state node");
    }
    double mass = 0.0;
    for (double w : initial_law) {
        if (!(w >= 0.0)) {
            throw InvalidParameter("initial law has a negative weight");
        }
        mass += w;
    }
    if (!(mass > 0.0)) {
        throw InvalidParameter("initial law has no mass");
    }

    const GaussHermite rule = gauss_hermite(noise.sigma > 0.0 ? noise.nodes : 1);
    const double dt = policy.time.dt();
    const double spread = noise.sigma * std::sqrt(dt);

    FlowOfMeasures f;
    f.states = g;
    f.controls = policy.controls;
    f.q.assign(steps, std::vector<double>(policy.controls.size(), 0.0));
    f.mu.assign(steps + 1, std::vector<double>(points, 0.0));
    for (std::size_t j = 0; j < points; ++j) {
        f.mu[0][j] = initial_law[j] / mass;
    }

    double overflow = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        const auto& cur = f.mu[n];
        auto& next = f.mu[n + 1];
        for (std::size_t j = 0; j < points; ++j) {
            const double m = cur[j];
            if (m == 0.0) {
                continue;
            }
            const std::size_t c = policy.policy_index(n, j);
            f.q[n][c] += m;
            const double drift = g.at(j) + policy.controls[c] * dt;
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                const Bracket b = locate(g, drift + spread * rule.nodes[k]);
                const double w = m * rule.weights[k];
                next[b.i] += w * (1.0 - b.theta);
                next[b.i + 1] += w * b.theta;
                if (b.outside > 1e-9) {
                    overflow += w;
                }
            }
        }
    }
    if (overflow > overflow_tol) {
        throw GridOverflow("mass " + std::to_string(overflow) + " left the state grid");
    }
    return f;
}

double w1_distance(std::span<const double> a, std::span<const double> b, double spacing) {
    if (a.size() != b.size()) {
        throw InvalidParameter("w1_distance: laws live on different grids");
    }
    double cdf_a = 0.0, cdf_b = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        cdf_a += a[i];
        cdf_b += b[i];
        total += std::abs(cdf_a - cdf_b);
    }
    return total * spacing;
}

double flow_distance(const FlowOfMeasures& a, const FlowOfMeasures& b) {
    if (a.mu.size() != b.mu.size() || a.q.size() != b.q.size()) {
        throw InvalidParameter("flow_distance: flows have different lengths");
    }
    const double control_spacing =
        a.controls.size() > 1 ? (a.controls.back() - a.controls.front()) /
                                    static_cast<double>(a.controls.size() - 1)
                              : 0.0;
    double worst = 0.0;
    for (std::size_t t = 0; t < a.mu.size(); ++t) {
        double d = w1_distance(a.mu[t], b.mu[t], a.states.spacing());
        if (t < a.q.size()) {
            d += w1_distance(a.q[t], b.q[t], control_spacing);
        }
        worst = std::max(worst, d);
    }
    return worst;
}

FlowOfMeasures mix_flows(const FlowOfMeasures& current, const FlowOfMeasures& target,
                         double lambda) {
    FlowOfMeasures out = current;
    auto blend = [lambda](std::vector<std::vector<double>>& dst,
                          const std::vector<std::vector<double>>& src) {
        for (std::size_t t = 0; t < dst.size(); ++t) {
            for (std::size_t i = 0; i < dst[t].size(); ++i) {
                dst[t][i] = (1.0 - lambda) * dst[t][i] + lambda * src[t][i];
            }
        }
    };
    blend(out.q, target.q);
    blend(out.mu, target.mu);
    return out;
}

std::vector<double> control_atoms(const UniformGrid& controls) {
    std::vector<double> out(controls.points);
    for (std::size_t i = 0; i < controls.points; ++i) {
        out[i] = controls.at(i);
    }
    return out;
}

std::vector<double> discretized_normal(const UniformGrid& states, double mean, double sd) {
    std::vector<double> w(states.points, 0.0);
    if (!(sd > 0.0)) {
        std::vector<double> nodes(states.points);
        for (std::size_t j = 0; j < states.points; ++j) {
            nodes[j] = states.at(j);
        }
        w[nearest_atom(nodes, mean)] = 1.0;
        return w;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < states.points; ++j) {
        const double z = (states.at(j) - mean) / sd;
        w[j] = std::exp(-0.5 * z * z);
        total += w[j];
    }
    for (auto& v : w) {
        v /= total;
    }
    return w;
}

void validate(const MfgProblem& problem) {
    validate(problem.params);
    validate(problem.time);
    validate(problem.states, "state grid");
    validate(problem.controls, "control grid");
    if (problem.states.points < 2) {
        throw InvalidParameter("state grid needs at least two points");
    }
    if (problem.initial_law.size() != problem.states.points) {
        throw InvalidParameter("initial law must have one weight per state node");
    }
    if (problem.lp_control.size() != problem.time.steps) {
        throw InvalidParameter("LP control path needs one value per step");
    }
    if (problem.noise_nodes == 0) {
        throw InvalidParameter("noise quadrature needs at least one node");
    }
}

MarketPath market_for_flows(const MfgProblem& problem, const FlowOfMeasures& flows) {
    const std::vector<double> means = flows.mean_controls();
    return build_market_path(problem.params, problem.time, means, problem.lp_control);
}

TraderProblem trader_problem(const MfgProblem& problem, const MarketPath& market) {
    TraderProblem tp;
    tp.time = problem.time;
    tp.states = problem.states;
    tp.controls = control_atoms(problem.controls);
    tp.sigma = problem.params.trader_sigma;
    tp.terminal_weight = problem.params.trader_terminal_weight;
    tp.noise_nodes = problem.noise_nodes;
    tp.stages = trader_stage_rewards(problem.params, market);
    return tp;
}

TraderProblem trader_problem(const MfgProblem& problem, std::span<const double> mean_control) {
    return trader_problem(problem, build_market_path(problem.params, problem.time, mean_control,
                                                     problem.lp_control));
}

FlowOfMeasures initial_flows(const MfgProblem& problem) {
    PolicyGrid idle;
    idle.time = problem.time;
    idle.states = problem.states;
    idle.controls = control_atoms(problem.controls);
    idle.policy.assign(problem.time.steps * problem.states.points,
                       nearest_atom(idle.controls, 0.0));
    return induced_flows(idle, problem.initial_law,
                         {problem.params.trader_sigma, problem.noise_nodes}, problem.overflow_tol);
}

FlowOfMeasures apply_mfg_map(const MfgProblem& problem, const FlowOfMeasures& flows,
                             PolicyGrid* policy_out) {
    const MarketPath market = market_for_flows(problem, flows);
    PolicyGrid policy = best_response(trader_problem(problem, market));
    FlowOfMeasures next = induced_flows(policy, problem.initial_law,
                                        {problem.params.trader_sigma, problem.noise_nodes},
                                        problem.overflow_tol);
    if (policy_out != nullptr) {
        *policy_out = std::move(policy);
    }
    return next;
}

double fixed_point_residual(const MfgProblem& problem, const FlowOfMeasures& flows) {
    return flow_distance(apply_mfg_map(problem, flows), flows);
}

MfgSolution solve_mfg(const MfgProblem& problem, const SolverOptions& options) {
    validate(problem);
    if (!(options.damping > 0.0 && options.damping <= 1.0)) {
        throw InvalidParameter("damping must lie in (0, 1]");
    }
    if (!(options.tol > 0.0) || options.max_iter == 0) {
        throw InvalidParameter("solver needs tol > 0 and max_iter >= 1");
    }

    MfgSolution sol;
    FlowOfMeasures flows = initial_flows(problem);
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        PolicyGrid policy;
        FlowOfMeasures mapped = apply_mfg_map(problem, flows, &policy);
        const double residual = flow_distance(mapped, flows);
        sol.residual_history.push_back(residual);
        if (residual <= options.tol) {
            sol.policy = std::move(policy);
            sol.market = market_for_flows(problem, flows);
            sol.flows = std::move(flows);
            sol.iterations = it;
            return sol;
        }
        flows = mix_flows(flows, mapped, options.damping);
    }
    throw NotConverged("mean-field fixed point did not reach tolerance in " +
                           std::to_string(options.max_iter) + " iterations",
                       std::move(sol.residual_history));
}

double lp_objective(const MfgProblem& problem, const MfgSolution& solution) {
    const MarketPath market = market_for_flows(problem, solution.flows);
    const ModelParams& p = problem.params;
    const double dt = problem.time.dt();
    double x = p.lp_initial_x;
    double z = p.lp_initial_z;
    double reward = 0.0;
    for (std::size_t n = 0; n < problem.time.steps; ++n) {
        const double a = problem.lp_control[n];
        reward += dt * lp_running_reward(x, a, market.aggregates(n), market.x_adj[n], p.phi(), p.k0());
        x += a * dt;
        z -= 2.0 * a * market.price[n] * dt;
    }
    return -reward + p.lp_terminal_weight * (x * x + z * z);
}

double evaluate_lp_candidate(const MfgProblem& base, std::span<const double> lp_values,
                             const SolverOptions& options, MfgSolution* solution_out) {
    MfgProblem problem = base;
    problem.lp_control = expand_lp_control(lp_values, base.time.steps);
    try {
        MfgSolution sol = solve_mfg(problem, options);
        const double cost = lp_objective(problem, sol);
        if (solution_out != nullptr) {
            *solution_out = std::move(sol);
        }
        return cost;
    } catch (const NotConverged&) {
    } catch (const DegenerateReserves&) {
    } catch (const GridOverflow&) {
    }
    return std::numeric_limits<double>::infinity();
}

EquilibriumSolution solve_major_minor(const MfgProblem& base, const SearchOptions& search,
                                      const SolverOptions& options) {
    if (search.segments == 0) {
        throw InvalidParameter("LP control needs at least one segment");
    }
    if (!(search.lp_min <= search.lp_max) || !(search.step_tol > 0.0) || search.budget == 0) {
        throw InvalidParameter("pattern search: invalid bounds, step tolerance or budget");
    }

    EquilibriumSolution out;
    std::vector<double> point(search.segments, std::clamp(0.0, search.lp_min, search.lp_max));
    double step = search.initial_step > 0.0 ? search.initial_step
                                            : 0.25 * (search.lp_max - search.lp_min);
    std::size_t evaluations = 0;
    double running_min = std::numeric_limits<double>::infinity();

    auto evaluate = [&](const std::vector<double>& values, double current_step) {
        const double cost = evaluate_lp_candidate(base, values, options);
        ++evaluations;
        running_min = std::min(running_min, cost);
        out.trace.push_back(
            SearchStep{evaluations, values, cost, current_step, std::isfinite(cost), running_min});
        return cost;
    };

    double best = evaluate(point, step);
    out.status = "budget_exhausted";
    out.final_step = step;
    while (evaluations < search.budget) {
        if (step < search.step_tol) {
            out.status = "converged";
            break;
        }
        std::vector<double> best_neighbor;
        double best_neighbor_cost = best;
        bool complete_poll = true;
        for (std::size_t i = 0; i < search.segments && complete_poll; ++i) {
            for (const double sign : {1.0, -1.0}) {
                std::vector<double> cand = point;
                cand[i] = std::clamp(point[i] + sign * step, search.lp_min, search.lp_max);
                if (cand[i] == point[i]) {
                    continue;
                }
                if (evaluations >= search.budget) {
                    complete_poll = false;
                    break;
                }
                const double cost = evaluate(cand, step);
                if (cost < best_neighbor_cost) {
                    best_neighbor_cost = cost;
                    best_neighbor = cand;
                }
            }
        }
        if (!best_neighbor.empty()) {
            point = best_neighbor;
            best = best_neighbor_cost;
        } else if (complete_poll) {
            out.final_step = step;
            step *= 0.5;
        }
    }
    if (out.status != "converged" && step < search.step_tol) {
        out.status = "converged";
    }

    out.lp_values = point;
    MfgProblem problem = base;
    problem.lp_control = expand_lp_control(point, base.time.steps);
    out.lp_control = problem.lp_control;
    out.lp_objective = evaluate_lp_candidate(base, point, options, &out.mfg);
    return out;
}

} // namespace ammfg
