#include "ammfg/cli.hpp"

#include "ammfg/errors.hpp"
#include "ammfg/lvr.hpp"
#include "ammfg/mfg_solver.hpp"
#include "ammfg/nplayer.hpp"
#include "ammfg/random.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ammfg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string direction_name(ArbDirection d) {
    switch (d) {
    case ArbDirection::BuyEthFromPool:
        return "buy";
    case ArbDirection::SellEthToPool:
        return "sell";
    case ArbDirection::None:
        break;
    }
    return "none";
}

json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Outputs {
public:
    Outputs(const SimConfig& config, const std::string& dir, std::string subcommand, bool timing)
        : config_(config), dir_(dir), subcommand_(std::move(subcommand)), timing_(timing),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    // Header block, then one CSV header row, then rows.
    void csv(const std::string& name, const std::vector<std::string>& columns,
             const std::vector<std::vector<std::string>>& rows) const {
        std::string text = output_header(config_);
        text += join(columns) + '\n';
        for (const auto& row : rows) {
            text += join(row) + '\n';
        }
        write(name, text);
    }

    void json_file(const std::string& name, json body) const {
        json doc;
        doc["header"] = header_json();
        for (auto& [key, value] : body.items()) {
            doc[key] = value;
        }
        write(name, doc.dump(2) + '\n');
    }

    void summary(const std::string& status, double objective, double final_residual,
                 json extra = json::object()) const {
        json body;
        body["subcommand"] = subcommand_;
        body["status"] = status;
        body["objective"] = json_number(objective);
        body["final_residual"] = json_number(final_residual);
        if (timing_) {
            body["runtime_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        } else {
            body["runtime_seconds"] = nullptr;
        }
        for (auto& [key, value] : extra.items()) {
            body[key] = value;
        }
        json_file("summary.json", std::move(body));
    }

    void residuals(const std::vector<double>& history) const {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < history.size(); ++i) {
            rows.push_back({std::to_string(i + 1), num(history[i])});
        }
        csv("residuals.csv", {"iteration", "residual"}, rows);
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += cells[i];
        }
        return out;
    }

    json header_json() const {
        json h;
        h["tool"] = kToolName;
        h["version"] = AMMFG_VERSION;
        h["config_hash"] = config_hash(config_);
        h["seed"] = config_.run.seed;
        return h;
    }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            throw Error("cannot write " + (dir_ / name).string());
        }
    }

    const SimConfig& config_;
    fs::path dir_;
    std::string subcommand_;
    bool timing_;
    std::chrono::steady_clock::time_point start_;
};

int not_converged(const Outputs& out, const NotConverged& e) {
    out.residuals(e.residuals());
    const double last = e.residuals().empty() ? std::numeric_limits<double>::quiet_NaN()
                                              : e.residuals().back();
    out.summary("not_converged", std::numeric_limits<double>::quiet_NaN(), last,
                {{"message", e.what()}});
    return kExitFailure;
}

int cmd_simulate(const SimConfig& cfg, const Outputs& out) {
    const MfgProblem problem = mfg_problem(cfg);
    MfgSolution sol;
    try {
        sol = solve_mfg(problem, solver_options(cfg));
    } catch (const NotConverged& e) {
        return not_converged(out, e);
    }
    out.residuals(sol.residual_history);
    const NPlayerRun run =
        simulate_n_players(cfg.harness.population, sol.policy, problem, cfg.run.seed);
    const SystemTrajectory& tr = run.trajectory;

    std::vector<std::vector<std::string>> rows;
    for (std::size_t n = 0; n < tr.time.size(); ++n) {
        const LPState& lp = tr.lp_states[n];
        const bool step = n < tr.mean_control.size();
        rows.push_back({std::to_string(n), num(tr.time[n]), num(tr.price[n]),
                        num(tr.model_price[n]), num(tr.reserve_x[n]), num(tr.reserve_y[n]),
                        num(tr.invariant[n]), num(tr.lvr[n]), num(lp.x), num(lp.y), num(lp.z),
                        num(lp.cumulative_control), step ? num(tr.mean_control[n]) : "",
                        step ? num(tr.lvr_rate[n]) : ""});
    }
    out.csv("trajectory.csv",
            {"step", "t", "price", "model_price", "reserve_x", "reserve_y", "invariant", "lvr",
             "lp_x", "lp_y", "lp_z", "lp_cumulative_control", "mean_control", "lvr_rate"},
            rows);

    json extra;
    extra["population"] = cfg.harness.population;
    extra["completed_steps"] = tr.completed_steps();
    if (tr.aborted) {
        extra["abort"] = {{"step", tr.aborted->step},
                          {"quantity", tr.aborted->quantity},
                          {"message", tr.aborted->message}};
        out.summary("aborted", std::numeric_limits<double>::quiet_NaN(),
                    sol.residual_history.back(), extra);
        return kExitFailure;
    }
    double mean_j = 0.0;
    for (double j : run.objectives) {
        mean_j += j;
    }
    mean_j /= static_cast<double>(run.objectives.size());
    out.summary("ok", mean_j, sol.residual_history.back(), extra);
    return kExitOk;
}

void write_flows(const Outputs& out, const MfgProblem& problem, const MfgSolution& sol) {
    std::vector<std::vector<std::string>> rows;
    const auto& f = sol.flows;
    for (std::size_t n = 0; n < f.mu.size(); ++n) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < f.mu[n].size(); ++j) {
            const double x = f.states.at(j);
            m += f.mu[n][j] * x;
            m2 += f.mu[n][j] * x * x;
        }
        const bool step = n < f.q.size();
        rows.push_back({std::to_string(n), num(problem.time.time(n)),
                        step ? num(sol.market.mean_control[n]) : "", num(m),
                        num(std::sqrt(std::max(0.0, m2 - m * m))), num(sol.market.price[n]),
                        step ? num(sol.market.lvr_rate[n]) : "",
                        step ? num(problem.lp_control[n]) : ""});
    }
    out.csv("flows.csv",
            {"step", "t", "mean_control", "state_mean", "state_sd", "price", "lvr_rate",
             "lp_control"},
            rows);
}

int cmd_solve_mfg(const SimConfig& cfg, const Outputs& out) {
    const MfgProblem problem = mfg_problem(cfg);
    MfgSolution sol;
    try {
        sol = solve_mfg(problem, solver_options(cfg));
    } catch (const NotConverged& e) {
        return not_converged(out, e);
    }
    out.residuals(sol.residual_history);
    write_flows(out, problem, sol);
    const double certificate = fixed_point_residual(problem, sol.flows);
    json extra;
    extra["iterations"] = sol.iterations;
    extra["certificate_residual"] = json_number(certificate);
    const bool ok = certificate <= cfg.solver.tol;
    out.summary(ok ? "converged" : "certificate_failed", lp_objective(problem, sol),
                sol.residual_history.back(), extra);
    return ok ? kExitOk : kExitFailure;
}

int cmd_solve_major_minor(const SimConfig& cfg, const Outputs& out) {
    MfgProblem base = mfg_problem(cfg);
    const SearchOptions search = search_options(cfg);
    const SolverOptions solver = solver_options(cfg);
    const EquilibriumSolution eq = solve_major_minor(base, search, solver);

    std::vector<std::string> columns{"evaluation", "step", "objective", "best_so_far",
                                     "inner_converged"};
    for (std::size_t i = 0; i < search.segments; ++i) {
        columns.push_back("lp_" + std::to_string(i + 1));
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : eq.trace) {
        std::vector<std::string> row{std::to_string(s.evaluation), num(s.step), num(s.objective),
                                     num(s.best_so_far), s.converged ? "1" : "0"};
        for (double v : s.lp_values) {
            row.push_back(num(v));
        }
        rows.push_back(std::move(row));
    }
    out.csv("search_trace.csv", columns, rows);
    out.residuals(eq.mfg.residual_history);

    // Local optimality certificate: every projected neighbor at the final step.
    bool locally_optimal = std::isfinite(eq.lp_objective);
    json neighbors = json::array();
    for (std::size_t i = 0; i < search.segments; ++i) {
        for (const double sign : {1.0, -1.0}) {
            std::vector<double> cand = eq.lp_values;
            cand[i] = std::clamp(cand[i] + sign * eq.final_step, search.lp_min, search.lp_max);
            const double cost = evaluate_lp_candidate(base, cand, solver);
            locally_optimal = locally_optimal && eq.lp_objective <= cost;
            neighbors.push_back(json_number(cost));
        }
    }
    json extra;
    extra["lp_values"] = eq.lp_values;
    extra["final_step"] = eq.final_step;
    extra["evaluations"] = eq.trace.size();
    extra["neighbor_objectives"] = neighbors;
    extra["locally_optimal"] = locally_optimal;
    const double residual =
        eq.mfg.residual_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : eq.mfg.residual_history.back();
    out.summary(eq.status, eq.lp_objective, residual, extra);
    return eq.status == "converged" && locally_optimal ? kExitOk : kExitFailure;
}

int cmd_arb_check(const SimConfig& cfg, const Outputs& out) {
    const auto rows = arb_check(cfg.arbcheck.draws, cfg.arbcheck.grid_points, cfg.run.seed);
    std::vector<std::vector<std::string>> cells;
    double max_disc = 0.0, max_band = 0.0;
    bool pass = true;
    for (const auto& r : rows) {
        cells.push_back({std::to_string(r.draw), num(r.r_alpha), num(r.r_beta), num(r.m_p),
                         num(r.tau), direction_name(r.closed_form.direction),
                         direction_name(r.oracle.direction), num(r.closed_form.profit),
                         num(r.oracle.profit), num(r.discrepancy), num(r.tolerance),
                         num(r.band_residual), r.pass ? "1" : "0"});
        max_disc = std::max(max_disc, r.discrepancy);
        max_band = std::max(max_band, r.band_residual);
        pass = pass && r.pass;
    }
    out.csv("arb_check.csv",
            {"draw", "r_alpha", "r_beta", "m_p", "tau", "direction", "oracle_direction",
             "closed_profit", "oracle_profit", "abs_discrepancy", "tolerance", "band_residual",
             "pass"},
            cells);
    json extra;
    extra["draws"] = rows.size();
    extra["max_band_residual"] = max_band;
    out.summary(pass ? "pass" : "fail", max_disc, max_band, extra);
    return pass ? kExitOk : kExitFailure;
}

int cmd_lvr_check(const SimConfig& cfg, const Outputs& out) {
    const auto rows = lvr_check(cfg);
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({std::to_string(r.steps), num(r.dt), num(r.mean_abs_gap),
                         num(r.stderr_abs_gap), num(r.mean_gap), num(r.stderr_gap),
                         num(r.mean_lvr), num(r.ratio)});
    }
    out.csv("lvr_check.csv",
            {"steps", "dt", "mean_abs_gap", "stderr_abs_gap", "mean_gap", "stderr_gap", "mean_lvr",
             "ratio"},
            cells);
    const bool pass = lvr_check_passes(rows);
    json extra;
    extra["paths"] = cfg.lvr.paths;
    out.summary(pass ? "pass" : "fail", rows.back().mean_abs_gap, rows.back().mean_gap, extra);
    return pass ? kExitOk : kExitFailure;
}

int cmd_nash_test(const SimConfig& cfg, const Outputs& out) {
    const MfgProblem problem = mfg_problem(cfg);
    MfgSolution sol;
    try {
        sol = solve_mfg(problem, solver_options(cfg));
    } catch (const NotConverged& e) {
        return not_converged(out, e);
    }
    const NashReport report =
        convergence_study(cfg.harness.n_list, problem, sol, cfg.run.seed, nash_options(cfg));

    std::vector<std::vector<std::string>> cells;
    json rows = json::array();
    bool sane = true;
    for (const auto& r : report.rows) {
        cells.push_back({std::to_string(r.n), num(r.gap), num(r.std_error),
                         std::to_string(r.replications), std::to_string(r.dropped)});
        rows.push_back({{"n", r.n},
                        {"gap", json_number(r.gap)},
                        {"std_error", json_number(r.std_error)},
                        {"replications", r.replications},
                        {"dropped", r.dropped}});
        sane = sane && std::isfinite(r.gap) && r.gap >= -3.0 * r.std_error;
    }
    out.csv("nash_report.csv", {"n", "gap", "std_error", "replications", "dropped"}, cells);
    const bool trend = std::isfinite(report.slope) && report.slope < 0.0;
    json body;
    body["rows"] = rows;
    body["log_log_slope"] = json_number(report.slope);
    body["paths_per_estimate"] = report.paths_per_estimate;
    body["seed"] = report.seed;
    out.json_file("nash_report.json", body);

    json extra;
    extra["log_log_slope"] = json_number(report.slope);
    extra["gaps_above_noise_floor"] = sane;
    extra["negative_slope"] = trend;
    const bool pass = sane && trend;
    out.summary(pass ? "pass" : "fail", report.slope, sol.residual_history.back(), extra);
    return pass ? kExitOk : kExitFailure;
}

} // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"simulate",  "solve-mfg", "solve-major-minor",
                                                "arb-check", "lvr-check", "nash-test",
                                                "print-config"};
    return names;
}

std::string output_header(const SimConfig& config) {
    return std::string("# ") + kToolName + " " + AMMFG_VERSION + "\n# config_hash " +
           config_hash(config) + "\n# seed " + std::to_string(config.run.seed) + "\n";
}

int run_subcommand(const std::string& name, const SimConfig& config, const std::string& out_dir,
                   std::ostream& console, const RunOptions& options) {
    if (name == "print-config") {
        const std::string text = output_header(config) + canonical_config(config);
        console << text;
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream(fs::path(out_dir) / "config.txt", std::ios::binary) << text;
        }
        return kExitOk;
    }
    if (out_dir.empty()) {
        throw ConfigError("--out", "an output directory is required for " + name);
    }
    const Outputs out(config, out_dir, name, options.timing);
    if (name == "simulate") {
        return cmd_simulate(config, out);
    }
    if (name == "solve-mfg") {
        return cmd_solve_mfg(config, out);
    }
    if (name == "solve-major-minor") {
        return cmd_solve_major_minor(config, out);
    }
    if (name == "arb-check") {
        return cmd_arb_check(config, out);
    }
    if (name == "lvr-check") {
        return cmd_lvr_check(config, out);
    }
    if (name == "nash-test") {
        return cmd_nash_test(config, out);
    }
    throw ConfigError("", "unknown subcommand '" + name + "'");
}

std::vector<ArbCheckRow> arb_check(std::size_t draws, std::size_t grid_points,
                                   std::uint64_t seed) {
    std::vector<ArbCheckRow> rows(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        Rng rng = make_stream(seed, i);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ArbCheckRow& r = rows[i];
        r.draw = i;
        r.r_alpha = 10.0 * std::pow(100.0, u(rng));
        const double pool_price = 0.1 * std::pow(100.0, u(rng));
        r.r_beta = r.r_alpha * pool_price;
        r.tau = 0.05 * u(rng);
        r.m_p = pool_price * std::exp(0.6 * u(rng) - 0.3);
        const double k = r.r_alpha * r.r_beta;
        const double phi = 1.0 - r.tau;
        r.closed_form = optimal_arbitrage(r.r_alpha, r.r_beta, k, r.m_p, phi);
        r.oracle = brute_force_arbitrage(r.r_alpha, r.r_beta, k, r.m_p, phi, grid_points);
        r.discrepancy = std::abs(r.closed_form.profit - r.oracle.profit);
        r.tolerance = 1e-6 * (1.0 + std::abs(r.oracle.profit));

        const PostTradeReserves post = execute_stage_one(r.closed_form, r.r_alpha, r.r_beta, phi);
        const double price = post.y / post.x;
        switch (r.closed_form.direction) {
        case ArbDirection::BuyEthFromPool:
            r.band_residual = std::abs(price / (phi * r.m_p) - 1.0);
            break;
        case ArbDirection::SellEthToPool:
            r.band_residual = std::abs(price * phi / r.m_p - 1.0);
            break;
        case ArbDirection::None:
            // Inactive: the pool price must already sit in [phi m, m / phi].
            r.band_residual = std::max({0.0, phi * r.m_p / price - 1.0, price * phi / r.m_p - 1.0});
            break;
        }
        r.pass = r.discrepancy <= r.tolerance && r.band_residual <= 1e-8;
    }
    return rows;
}

std::vector<LvrCheckRow> lvr_check(const SimConfig& config) {
    std::vector<LvrCheckRow> rows;
    for (std::size_t steps : config.lvr.steps) {
        const LvrExperimentResult res = run_lvr_experiment(lvr_spec(config, steps));
        LvrCheckRow r;
        r.steps = steps;
        r.dt = config.lvr.horizon / static_cast<double>(steps);
        r.mean_abs_gap = res.mean_abs_gap;
        r.stderr_abs_gap = res.stderr_abs_gap;
        r.mean_gap = res.mean_gap;
        r.stderr_gap = res.stderr_gap;
        r.mean_lvr = res.mean_lvr;
        r.ratio = rows.empty() ? 0.0 : rows.back().mean_abs_gap / r.mean_abs_gap;
        rows.push_back(r);
    }
    return rows;
}

bool lvr_check_passes(const std::vector<LvrCheckRow>& rows) {
    if (rows.empty()) {
        return false;
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].ratio >= 2.0)) {
            return false;
        }
    }
    return std::abs(rows.back().mean_gap) <= 3.0 * rows.back().stderr_gap;
}

} // namespace ammfg
