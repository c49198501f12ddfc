#pragma once

#include "ammfg/agents.hpp"
#include "ammfg/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ammfg {

// Gaussian increments, each N(0, dt), one entry per step.
struct NoiseBundle {
    std::vector<double> common;
    std::vector<std::vector<double>> idiosyncratic; // [trader][step]
    std::vector<double> lp_x;
    std::vector<double> lp_y;
    std::vector<double> lp_z;
};

// Stream ids used by make_noise; trader i draws from kTraderStreamBase + i.
inline constexpr std::uint64_t kCommonStream = 0;
inline constexpr std::uint64_t kLpStreamBase = 1;
inline constexpr std::uint64_t kTraderStreamBase = 16;
inline constexpr std::uint64_t kInitialStateStreamBase = std::uint64_t{1} << 40;

NoiseBundle make_noise(std::uint64_t seed, const TimeGrid& grid, std::size_t n_traders);

/// Trader i's increments drawn from an explicit stream id (used to permute players).
std::vector<double> make_trader_increments(std::uint64_t seed, std::uint64_t stream_id,
                                           const TimeGrid& grid);

// Control of trader `player` at step n in ETH inventory state x.
using PopulationPolicy = std::function<double(std::size_t player, std::size_t n, double x)>;

struct AbortRecord {
    std::size_t step = 0;
    std::string quantity;
    std::string message;
};

struct SystemTrajectory {
    std::vector<double> time;
    std::vector<double> price;       // Euler-Maruyama price state
    std::vector<double> model_price; // price equation at the current reserves
    std::vector<double> reserve_x;
    std::vector<double> reserve_y;
    std::vector<double> invariant;
    std::vector<double> lvr;
    std::vector<LPState> lp_states;
    std::vector<double> mean_control; // one per step
    std::vector<double> lvr_rate;     // one per step
    std::vector<double> lp_reward;    // accumulated int f_LP dt

    std::vector<TraderState> traders_final;
    std::vector<double> trader_reward; // accumulated int f dt per trader
    std::vector<std::vector<double>> trader_x_paths; // filled when recorded

    std::optional<AbortRecord> aborted;

    std::size_t completed_steps() const noexcept { return mean_control.size(); }
};

struct SimulationOptions {
    bool record_trader_paths = false;
};

/// Euler-Maruyama with left-point coefficients for the price, reserves,
/// trader population, LP state and LVR. Degenerate reserves stop the run and
/// set `aborted`; completed steps stay in the trajectory.
SystemTrajectory simulate(const ModelParams& params, const TimeGrid& grid,
                          const PopulationPolicy& policy, std::span<const double> lp_control,
                          std::span<const double> initial_x, const NoiseBundle& noise,
                          const SimulationOptions& options = {});

/// Draws initial ETH inventories for n traders from a discrete law on
/// `support` (weights need not be normalized). Trader i uses its own stream.
std::vector<double> sample_initial_states(std::uint64_t seed, std::span<const double> support,
                                          std::span<const double> weights, std::size_t n);

/// One draw from the same law using initial-state stream `stream_id`.
double sample_initial_state(std::uint64_t seed, std::uint64_t stream_id,
                            std::span<const double> support, std::span<const double> weights);

} // namespace ammfg
