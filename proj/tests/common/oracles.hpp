#pragma once

#include "ammfg/mfg_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Deterministic instance whose moves a*dt are whole multiples of the state spacing,
// so open-loop paths stay on grid nodes: 5 steps, 21 states on [-1, 1], 5 controls.
inline ammfg::TraderProblem small_dp_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ammfg::TraderProblem p;
    p.time = {0.5, 5};
    p.states = {-1.0, 1.0, 21};
    p.controls = {-2.0, -1.0, 0.0, 1.0, 2.0};
    p.sigma = 0.0;
    p.terminal_weight = std::abs(u(rng));
    for (std::size_t n = 0; n < p.time.steps; ++n) {
        p.stages.push_back({u(rng), u(rng), 0.5 * u(rng)});
    }
    return p;
}

struct OpenLoopBest {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> controls;
};

// Exhaustive enumeration of control sequences from node j with clamped,
// noise-free transitions. Independent of the DP recursion.
inline OpenLoopBest brute_force_open_loop(const ammfg::TraderProblem& p, std::size_t j) {
    const std::size_t steps = p.time.steps;
    const std::size_t m = p.controls.size();
    const double dt = p.time.dt();
    std::size_t total = 1;
    for (std::size_t n = 0; n < steps; ++n) {
        total *= m;
    }
    OpenLoopBest best;
    std::vector<std::size_t> seq(steps);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t n = 0; n < steps; ++n) {
            seq[n] = c % m;
            c /= m;
        }
        double x = p.states.at(j);
        double v = 0.0;
        for (std::size_t n = 0; n < steps; ++n) {
            const double a = p.controls[seq[n]];
            v += dt * p.stages[n](x, a);
            x = std::clamp(x + a * dt, p.states.lo, p.states.hi);
        }
        v -= p.terminal_weight * x * x;
        if (v > best.value) {
            best.value = v;
            best.controls = seq;
        }
    }
    return best;
}

} // namespace oracle
