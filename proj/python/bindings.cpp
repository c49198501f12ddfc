#include "ammfg/arbitrage.hpp"
#include "ammfg/cli.hpp"
#include "ammfg/config.hpp"
#include "ammfg/errors.hpp"
#include "ammfg/lvr.hpp"
#include "ammfg/mfg_solver.hpp"
#include "ammfg/nplayer.hpp"
#include "ammfg/pool.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

const char* direction_name(ammfg::ArbDirection d) {
    switch (d) {
    case ammfg::ArbDirection::BuyEthFromPool:
        return "buy";
    case ammfg::ArbDirection::SellEthToPool:
        return "sell";
    case ammfg::ArbDirection::None:
        break;
    }
    return "none";
}

py::dict arb_dict(const ammfg::ArbSolution& s) {
    return py::dict("delta_alpha"_a = s.delta_alpha, "delta_beta"_a = s.delta_beta,
                    "profit"_a = s.profit, "direction"_a = direction_name(s.direction));
}

py::dict mfg_dict(const ammfg::MfgProblem& problem, const ammfg::MfgSolution& sol) {
    return py::dict("residual_history"_a = sol.residual_history,
                    "iterations"_a = sol.iterations,
                    "mean_controls"_a = sol.flows.mean_controls(),
                    "price"_a = sol.market.price,
                    "certificate_residual"_a = ammfg::fixed_point_residual(problem, sol.flows),
                    "lp_objective"_a = ammfg::lp_objective(problem, sol));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Constant-product AMM mean-field game core";
    m.attr("__version__") = AMMFG_VERSION;

    auto base = py::register_exception<ammfg::Error>(m, "AmmfgError", PyExc_RuntimeError);
    py::register_exception<ammfg::DegenerateReserves>(m, "DegenerateReserves", base.ptr());
    py::register_exception<ammfg::InvalidParameter>(m, "InvalidParameter", base.ptr());
    py::register_exception<ammfg::GridOverflow>(m, "GridOverflow", base.ptr());
    py::register_exception<ammfg::NotConverged>(m, "NotConverged", base.ptr());
    py::register_exception<ammfg::ConfigError>(m, "ConfigError", base.ptr());

    // pool
    m.def("spot_price", [](double x, double y) { return ammfg::spot_price(ammfg::make_pool(x, y, 0.0)); },
          "x"_a, "y"_a);
    m.def("execution_price", &ammfg::execution_price, "k0"_a, "x_adj"_a, "delta_x"_a, "phi"_a);
    m.def(
        "quote_trade",
        [](double k0, double x_adj, double y_adj, double delta_x, double tau) {
            ammfg::PoolState pool = ammfg::make_pool(x_adj, y_adj, tau);
            pool.invariant_k = k0;
            const auto q = ammfg::quote_trade(pool, x_adj, y_adj, delta_x);
            return py::make_tuple(q.delta_y, q.new_invariant);
        },
        "k0"_a, "x_adj"_a, "y_adj"_a, "delta_x"_a, "tau"_a,
        "Returns (delta_y, new_invariant) of a two-stage fee trade.");
    m.def("slippage", &ammfg::slippage, "alpha"_a, "x_total"_a);
    m.def("post_trade_invariant", &ammfg::post_trade_invariant, "k0"_a, "x_adj"_a, "delta_x"_a,
          "phi"_a);

    // arbitrage
    m.def(
        "no_arb_band",
        [](double m_p, double tau) {
            const auto b = ammfg::no_arb_band(m_p, tau);
            return py::make_tuple(b.lower, b.upper);
        },
        "m_p"_a, "tau"_a);
    m.def(
        "optimal_arbitrage",
        [](double r_alpha, double r_beta, double k, double m_p, double phi) {
            return arb_dict(ammfg::optimal_arbitrage(r_alpha, r_beta, k, m_p, phi));
        },
        "r_alpha"_a, "r_beta"_a, "k"_a, "m_p"_a, "phi"_a);
    m.def(
        "brute_force_arbitrage",
        [](double r_alpha, double r_beta, double k, double m_p, double phi, std::size_t points) {
            return arb_dict(ammfg::brute_force_arbitrage(r_alpha, r_beta, k, m_p, phi, points));
        },
        "r_alpha"_a, "r_beta"_a, "k"_a, "m_p"_a, "phi"_a, "grid_points"_a = 2001);

    // lvr
    m.def("pool_value", &ammfg::pool_value, "p"_a, "k"_a);
    m.def("instantaneous_lvr", &ammfg::instantaneous_lvr, "p"_a, "sigma"_a, "k"_a);
    m.def("replication_increment", &ammfg::replication_increment, "p_prev"_a, "p_next"_a, "k"_a);
    m.def(
        "run_lvr_experiment",
        [](double sigma, double horizon, std::size_t steps, std::size_t paths, double p0, double k,
           std::uint64_t seed) {
            ammfg::LvrExperimentSpec spec;
            spec.sigma = sigma;
            spec.horizon = horizon;
            spec.steps = steps;
            spec.paths = paths;
            spec.p0 = p0;
            spec.k = k;
            spec.seed = seed;
            const auto r = ammfg::run_lvr_experiment(spec);
            return py::dict("mean_gap"_a = r.mean_gap, "stderr_gap"_a = r.stderr_gap,
                            "mean_abs_gap"_a = r.mean_abs_gap,
                            "stderr_abs_gap"_a = r.stderr_abs_gap, "mean_lvr"_a = r.mean_lvr);
        },
        "sigma"_a = 0.2, "horizon"_a = 1.0, "steps"_a = 1000, "paths"_a = 1000, "p0"_a = 1.0,
        "k"_a = 10000.0, "seed"_a = 0);

    // configuration
    py::class_<ammfg::SimConfig>(m, "Config")
        .def(py::init<>())
        .def("canonical", &ammfg::canonical_config)
        .def("hash", &ammfg::config_hash)
        .def("override", &ammfg::apply_override, "assignment"_a)
        .def_property(
            "seed", [](const ammfg::SimConfig& c) { return c.run.seed; },
            [](ammfg::SimConfig& c, std::uint64_t s) { c.run.seed = s; })
        .def("__repr__", [](const ammfg::SimConfig& c) {
            return "<ammfg.Config hash=" + ammfg::config_hash(c) + ">";
        });
    m.def("parse_config", &ammfg::parse_config, "text"_a);
    m.def("load_config", &ammfg::load_config, "path"_a);

    // solvers
    m.def(
        "solve_mfg",
        [](const ammfg::SimConfig& config) {
            const auto problem = ammfg::mfg_problem(config);
            py::gil_scoped_release release;
            const auto sol = ammfg::solve_mfg(problem, ammfg::solver_options(config));
            py::gil_scoped_acquire acquire;
            return mfg_dict(problem, sol);
        },
        "config"_a);
    m.def(
        "solve_major_minor",
        [](const ammfg::SimConfig& config) {
            const auto base = ammfg::mfg_problem(config);
            ammfg::EquilibriumSolution eq;
            {
                py::gil_scoped_release release;
                eq = ammfg::solve_major_minor(base, ammfg::search_options(config),
                                              ammfg::solver_options(config));
            }
            return py::dict("lp_values"_a = eq.lp_values, "lp_objective"_a = eq.lp_objective,
                            "final_step"_a = eq.final_step, "status"_a = eq.status,
                            "evaluations"_a = eq.trace.size(),
                            "residual_history"_a = eq.mfg.residual_history);
        },
        "config"_a);
    m.def(
        "convergence_study",
        [](const ammfg::SimConfig& config) {
            const auto problem = ammfg::mfg_problem(config);
            ammfg::NashReport report;
            {
                py::gil_scoped_release release;
                const auto sol = ammfg::solve_mfg(problem, ammfg::solver_options(config));
                report = ammfg::convergence_study(config.harness.n_list, problem, sol,
                                                  config.run.seed, ammfg::nash_options(config));
            }
            py::list rows;
            for (const auto& r : report.rows) {
                rows.append(py::dict("n"_a = r.n, "gap"_a = r.gap, "std_error"_a = r.std_error,
                                     "replications"_a = r.replications, "dropped"_a = r.dropped));
            }
            return py::dict("rows"_a = rows, "slope"_a = report.slope, "seed"_a = report.seed);
        },
        "config"_a);

    m.def(
        "run_subcommand",
        [](const std::string& name, const ammfg::SimConfig& config, const std::string& out_dir) {
            std::ostringstream console;
            const int code = ammfg::run_subcommand(name, config, out_dir, console);
            return py::make_tuple(code, console.str());
        },
        "name"_a, "config"_a, "out_dir"_a = "",
        "Runs a subcommand; returns (exit_code, console_text).");
}
