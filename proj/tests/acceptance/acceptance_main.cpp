// Acceptance checks 1-10. One PASS/FAIL line per criterion; nonzero exit on any failure.
#include "ammfg/agents.hpp"
#include "ammfg/cli.hpp"
#include "ammfg/config.hpp"
#include "ammfg/errors.hpp"
#include "ammfg/lvr.hpp"
#include "ammfg/mfg_solver.hpp"
#include "ammfg/nplayer.hpp"
#include "ammfg/pool.hpp"
#include "ammfg/sde_engine.hpp"

#include "oracles.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ammfg;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kArbProfitTol = 1e-6;     // relative to 1 + |oracle|
constexpr double kArbBandTol = 1e-8;
constexpr double kArbSeconds = 10;
constexpr double kLvrSeconds = 120;
constexpr double kRichardsonLo = 80, kRichardsonHi = 120;
constexpr double kRichardsonSeconds = 1;
constexpr double kInvariantTol = 1e-9;     // relative to k0
constexpr double kNeutralityTol = 1e-12;
constexpr std::size_t kRandomTrades = 100000;
constexpr double kPoolSeconds = 5;
constexpr std::size_t kDpDraws = 50;
constexpr double kDpTol = 1e-9;
constexpr double kDpSeconds = 30;
constexpr double kMfgTol = 1e-6;
constexpr std::size_t kMfgMaxIter = 500;
constexpr double kMfgSeconds = 120;
constexpr double kMajorMinorSeconds = 1200;
constexpr double kNashSeconds = 600;
constexpr double kReductionTol = 1e-8;

struct Result {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string time_note(double s, double budget) {
    return " time=" + fmt("%.2f", s) + "s/" + fmt("%.0f", budget) + "s";
}

Result arbitrage_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig cfg;
    const auto rows = arb_check(1000, cfg.arbcheck.grid_points, cfg.run.seed);
    double worst_rel = 0.0, worst_band = 0.0;
    bool ok = rows.size() == 1000;
    for (const auto& r : rows) {
        worst_rel = std::max(worst_rel, r.discrepancy / (1.0 + std::abs(r.oracle.profit)));
        worst_band = std::max(worst_band, r.band_residual);
        ok = ok && r.discrepancy <= kArbProfitTol * (1.0 + std::abs(r.oracle.profit)) &&
             r.band_residual <= kArbBandTol;
    }
    const double s = seconds_since(t0);
    return {ok && s < kArbSeconds, "draws=1000 max_rel_discrepancy=" + fmt("%.3g", worst_rel) +
                                       " (tol 1e-6) max_band_residual=" + fmt("%.3g", worst_band) +
                                       " (tol 1e-8)" + time_note(s, kArbSeconds)};
}

Result lvr_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig cfg; // sigma 0.2, T 1, 10000 paths, dt 1e-2 / 1e-3 / 1e-4
    const auto rows = lvr_check(cfg);
    std::string d;
    for (const auto& r : rows) {
        d += " dt=" + fmt("%g", r.dt) + ":mean|gap|=" + fmt("%.4g", r.mean_abs_gap);
        if (r.ratio > 0) {
            d += ",ratio=" + fmt("%.3g", r.ratio);
        }
    }
    const auto& last = rows.back();
    d += " finest_mean=" + fmt("%.3g", last.mean_gap) + " se=" + fmt("%.3g", last.stderr_gap);
    const double s = seconds_since(t0);
    return {lvr_check_passes(rows) && cfg.lvr.paths == 10000 && s < kLvrSeconds,
            "paths=10000" + d + " (ratio>=2, |mean|<=3se)" + time_note(s, kLvrSeconds)};
}

Result lvr_finite_difference() {
    using Wide = boost::multiprecision::cpp_bin_float_50;
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma = 0.2;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, worst_value = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double p = std::pow(10.0, -1.0 + 2.0 * i / 9.0); // 0.1 .. 10
        for (int j = 0; j < 10; ++j) {
            const double k = std::pow(10.0, 6.0 * j / 9.0); // 1 .. 1e6
            const auto v = [&](const Wide& x) { return 2 * sqrt(Wide(k) * x); };
            worst_value = std::max(
                worst_value, std::abs(pool_value(p, k) / static_cast<double>(v(Wide(p))) - 1.0));
            const double exact = instantaneous_lvr(p, sigma, k);
            const auto err = [&](double h) {
                const Wide wp(p), wh(h);
                const Wide d2 = (v(wp + wh) - 2 * v(wp) + v(wp - wh)) / (wh * wh);
                const double fd = static_cast<double>(-Wide(sigma * sigma) / 2 * wp * wp * d2);
                return std::abs(fd - exact);
            };
            const double ratio = err(1e-3) / err(1e-4);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    }
    const double s = seconds_since(t0);
    const bool ok = lo >= kRichardsonLo && hi <= kRichardsonHi && worst_value <= 1e-14;
    return {ok && s < kRichardsonSeconds,
            "grid=10x10 ratio_min=" + fmt("%.2f", lo) + " ratio_max=" + fmt("%.2f", hi) +
                " (in [80,120]) pool_value_rel_err=" + fmt("%.2g", worst_value) +
                time_note(s, kRichardsonSeconds)};
}

Result pool_mechanics() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> logr(0.0, 6.0), frac(-0.95, 3.0), u(0.0, 1.0);
    const double fees[] = {0.0, 0.003, 0.01, 0.05};
    double worst_inv = 0.0, worst_neutral = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < kRandomTrades; ++i) {
        const double x = std::pow(10.0, logr(rng));
        const double y = std::pow(10.0, logr(rng));
        const double tau = fees[i % 4];
        double dx = frac(rng) * x;
        if (dx == 0.0) {
            dx = 1e-3 * x;
        }
        const PoolState pool = make_pool(x, y, tau);
        const double k0 = pool.invariant_k;
        const TradeQuote q = quote_trade(pool, x, y, dx);
        worst_inv = std::max(worst_inv, std::abs((x + pool.phi() * dx) * (y - q.delta_y) - k0) / k0);
        // fee accrual for pool-bound ETH; tau = 0 keeps k0
        if (tau > 0.0 ? (dx > 0.0 && !(q.new_invariant > k0))
                      : std::abs(q.new_invariant - k0) > 1e-15 * k0) {
            monotone = false;
        }
        // LP deposit of (a, a P) at the current ratio
        const double p = spot_price(pool);
        const double a = u(rng) * x;
        const PoolState after = make_pool(x + a, y + a * p, tau);
        worst_neutral = std::max(worst_neutral, std::abs(spot_price(after) / p - 1.0));
    }
    const double s = seconds_since(t0);
    const bool ok = worst_inv <= kInvariantTol && monotone && worst_neutral <= kNeutralityTol;
    return {ok && s < kPoolSeconds,
            "trades=100000 max_stage1_rel=" + fmt("%.3g", worst_inv) + " (tol 1e-9) fee_monotone(dx>0)=" +
                (monotone ? "yes" : "no") + " max_lp_neutrality_rel=" + fmt("%.3g", worst_neutral) +
                " (tol 1e-12)" + time_note(s, kPoolSeconds)};
}

Result dp_vs_brute_force() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(5150);
    double worst = 0.0;
    std::size_t policy_mismatch = 0;
    for (std::size_t d = 0; d < kDpDraws; ++d) {
        const TraderProblem p = oracle::small_dp_instance(rng);
        const PolicyGrid pol = best_response(p);
        for (std::size_t j = 0; j < p.states.points; ++j) {
            const auto bf = oracle::brute_force_open_loop(p, j);
            worst = std::max(worst, std::abs(pol.value_at(0, j) - bf.value) / (1.0 + std::abs(bf.value)));
            // the DP policy, followed from j, must realize the optimum
            double x = p.states.at(j), v = 0.0;
            const double dt = p.time.dt();
            for (std::size_t n = 0; n < p.time.steps; ++n) {
                const double a = pol.control_at(n, x);
                v += dt * p.stages[n](x, a);
                x = std::clamp(x + a * dt, p.states.lo, p.states.hi);
            }
            v -= p.terminal_weight * x * x;
            if (std::abs(v - bf.value) > kDpTol * (1.0 + std::abs(bf.value))) {
                ++policy_mismatch;
            }
        }
    }
    const double s = seconds_since(t0);
    return {worst <= kDpTol && policy_mismatch == 0 && s < kDpSeconds,
            "draws=50 instance=5x21x5 sigma=0 max_value_rel_err=" + fmt("%.3g", worst) +
                " (tol 1e-9) policy_mismatches=" + std::to_string(policy_mismatch) +
                time_note(s, kDpSeconds)};
}

Result mfg_fixed_point() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig cfg;
    const MfgProblem problem = mfg_problem(cfg);
    SolverOptions opt = solver_options(cfg);
    opt.tol = kMfgTol;
    opt.max_iter = kMfgMaxIter;
    try {
        const MfgSolution sol = solve_mfg(problem, opt);
        const double cert = fixed_point_residual(problem, sol.flows);
        const double s = seconds_since(t0);
        const bool shape = problem.time.steps == 50 && problem.states.points == 101 &&
                           problem.controls.points == 11;
        return {shape && sol.residual_history.back() <= kMfgTol && cert <= kMfgTol && s < kMfgSeconds,
                "instance=50x101x11 iterations=" + std::to_string(sol.iterations) + " residual=" +
                    fmt("%.3g", sol.residual_history.back()) + " certificate=" + fmt("%.3g", cert) +
                    " (tol 1e-6, max_iter 500)" + time_note(s, kMfgSeconds)};
    } catch (const NotConverged& e) {
        return {false, std::string("not converged: ") + e.what()};
    }
}

Result major_minor() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig cfg;
    const MfgProblem base = mfg_problem(cfg);
    const SearchOptions search = search_options(cfg);
    const SolverOptions opt = solver_options(cfg);
    const EquilibriumSolution eq = solve_major_minor(base, search, opt);
    bool ok = eq.status == "converged" && std::isfinite(eq.lp_objective) && search.segments == 4;
    std::size_t infinite = 0;
    double best_neighbor = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eq.lp_values.size(); ++i) {
        for (const double sign : {1.0, -1.0}) {
            auto cand = eq.lp_values;
            cand[i] = std::clamp(cand[i] + sign * eq.final_step, search.lp_min, search.lp_max);
            const double c = evaluate_lp_candidate(base, cand, opt);
            if (!std::isfinite(c)) {
                ++infinite;
            }
            best_neighbor = std::min(best_neighbor, c);
            ok = ok && eq.lp_objective <= c;
        }
    }
    std::string values;
    for (double v : eq.lp_values) {
        values += (values.empty() ? "" : ",") + fmt("%g", v);
    }
    const double s = seconds_since(t0);
    return {ok && s < kMajorMinorSeconds,
            "K=4 lp=[" + values + "] objective=" + fmt("%.6g", eq.lp_objective) +
                " best_neighbor=" + fmt("%.6g", best_neighbor) + " final_step=" +
                fmt("%g", eq.final_step) + " neighbors_not_converged=" + std::to_string(infinite) +
                "/8 evaluations=" + std::to_string(eq.trace.size()) + time_note(s, kMajorMinorSeconds)};
}

Result epsilon_nash() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig cfg; // N 8,16,32,64, 100 replications
    const MfgProblem problem = mfg_problem(cfg);
    const MfgSolution sol = solve_mfg(problem, solver_options(cfg));
    const NashReport rep =
        convergence_study(cfg.harness.n_list, problem, sol, cfg.run.seed, nash_options(cfg));
    bool ok = rep.slope < 0.0 && cfg.harness.replications == 100;
    std::string d;
    for (const auto& r : rep.rows) {
        ok = ok && r.gap >= -3.0 * r.std_error;
        d += " N=" + std::to_string(r.n) + ":" + fmt("%.3g", r.gap) + "+-" + fmt("%.2g", r.std_error);
    }
    const double s = seconds_since(t0);
    return {ok && s < kNashSeconds,
            "replications=100" + d + " slope=" + fmt("%.3f", rep.slope) +
                " (slope<0, gap>=-3se)" + time_note(s, kNashSeconds)};
}

Result base_model_reduction() {
    SimConfig cfg = parse_config("arbitrage.enabled = false\ntrader.slippage = false\n"
                                 "trader.sigma = 0\nmarket.common_sigma = 0\n"
                                 "lp.sigma_x = 0\nlp.sigma_y = 0\nlp.sigma_z = 0\n");
    const ModelParams params = model_params(cfg);
    const TimeGrid grid = time_grid(cfg);
    const std::size_t n_traders = 7;
    const std::vector<double> lp(grid.steps, 0.0);
    std::vector<double> x0(n_traders);
    for (std::size_t i = 0; i < n_traders; ++i) {
        x0[i] = 0.3 * static_cast<double>(i) - 0.8;
    }
    const PopulationPolicy policy = [](std::size_t i, std::size_t n, double x) {
        return 0.6 * std::sin(0.4 * static_cast<double>(n) + static_cast<double>(i)) - 0.1 * x;
    };
    const SystemTrajectory tr =
        simulate(params, grid, policy, lp, x0, make_noise(cfg.run.seed, grid, n_traders));
    if (tr.aborted) {
        return {false, "simulation aborted: " + tr.aborted->message};
    }

    // Independent fee-only model: P = k0 / ((X0 + phi D)(X0 + D)), D = -dt sum mean alpha,
    // dX = alpha dt, dY = -alpha (1 + phi^2)/(2 phi) P dt, reward = drift of Y + X P.
    const double k0 = params.x0 * params.y0, X0 = params.x0, phi = 1.0 - params.tau;
    const double dt = grid.dt(), c = (1.0 + phi * phi) / (2.0 * phi);
    std::vector<double> x = x0, reward(n_traders, 0.0), alpha(n_traders);
    double d = 0.0, worst_price = 0.0;
    for (std::size_t n = 0; n <= grid.steps; ++n) {
        const double a = X0 + phi * d, b = X0 + d;
        const double p = k0 / (a * b);
        worst_price = std::max(worst_price, std::abs(tr.model_price[n] / p - 1.0));
        if (n == grid.steps) {
            break;
        }
        double mean = 0.0;
        for (std::size_t i = 0; i < n_traders; ++i) {
            alpha[i] = policy(i, n, x[i]);
            mean += alpha[i];
        }
        mean /= static_cast<double>(n_traders);
        const double d_rate = -mean;
        const double p_dot = -k0 * d_rate * (phi * b + a) / ((a * b) * (a * b));
        for (std::size_t i = 0; i < n_traders; ++i) {
            reward[i] += dt * (alpha[i] * p * (1.0 - c) + x[i] * p_dot);
            x[i] += alpha[i] * dt;
        }
        d -= mean * dt;
    }
    double worst_reward = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n_traders; ++i) {
        scale = std::max(scale, std::abs(reward[i]));
    }
    for (std::size_t i = 0; i < n_traders; ++i) {
        worst_reward = std::max(worst_reward, std::abs(tr.trader_reward[i] - reward[i]) / scale);
        worst_reward = std::max(worst_reward, std::abs(tr.traders_final[i].x / x[i] - 1.0));
    }
    return {worst_price <= kReductionTol && worst_reward <= kReductionTol && scale > 0.0,
            "traders=7 steps=" + std::to_string(grid.steps) + " max_price_rel=" +
                fmt("%.3g", worst_price) + " max_reward_rel=" + fmt("%.3g", worst_reward) +
                " (tol 1e-8)"};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            out[fs::relative(e.path(), dir).string()] =
                std::string(std::istreambuf_iterator<char>(in), {});
        }
    }
    return out;
}

Result determinism() {
    const auto t0 = std::chrono::steady_clock::now();
    // Reduced sizes keep the doubled runs short; every subcommand and output file is covered.
    SimConfig cfg = parse_config("grid.steps = 20\npool.x0 = 200\npool.y0 = 200\nlvr.paths = 500\nlvr.steps = 100, 1000\n"
                                 "harness.n_list = 4, 8\nharness.replications = 10\n"
                                 "harness.population = 32\narbcheck.draws = 200\n"
                                 "solver.search_budget = 40\n");
    cfg.run.seed = 12345;
    const fs::path root = fs::temp_directory_path() / "ammfg_acceptance_determinism";
    fs::remove_all(root);
    std::size_t files = 0;
    std::vector<std::string> differing;
    for (const auto& name : subcommand_names()) {
        std::map<std::string, std::string> runs[2];
        std::string console[2];
        for (int r = 0; r < 2; ++r) {
            const fs::path dir = root / (name + "_" + std::to_string(r));
            std::ostringstream con;
            run_subcommand(name, cfg, dir.string(), con);
            console[r] = con.str();
            runs[r] = snapshot(dir);
        }
        files += runs[0].size();
        if (runs[0] != runs[1] || runs[0].empty() || console[0] != console[1]) {
            differing.push_back(name);
        }
    }
    fs::remove_all(root);
    std::string d = "subcommands=" + std::to_string(subcommand_names().size()) +
                    " files=" + std::to_string(files) + " differing=";
    for (const auto& n : differing) {
        d += n + ";";
    }
    d += differing.empty() ? "none" : "";
    return {differing.empty(), d + " time=" + fmt("%.2f", seconds_since(t0)) + "s"};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
        {"arbitrage closed form vs oracle", arbitrage_oracle},
        {"LVR identity convergence", lvr_identity},
        {"LVR rate vs finite differences", lvr_finite_difference},
        {"constant-product mechanics", pool_mechanics},
        {"DP best response vs brute force", dp_vs_brute_force},
        {"MFG fixed point", mfg_fixed_point},
        {"major-minor local optimality", major_minor},
        {"epsilon-Nash trend", epsilon_nash},
        {"base-model reduction", base_model_reduction},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failures += r.pass ? 0 : 1;
        std::printf("%s criterion %zu: %s | %s\n", r.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
