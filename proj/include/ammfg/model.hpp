#pragma once

#include <cstddef>

namespace ammfg {

struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 50;

    double dt() const noexcept { return horizon / static_cast<double>(steps); }
    double time(std::size_t n) const noexcept { return dt() * static_cast<double>(n); }
};

// Uniform grid of `points` nodes on [lo, hi].
struct UniformGrid {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 1;

    double spacing() const noexcept {
        return points > 1 ? (hi - lo) / static_cast<double>(points - 1) : 0.0;
    }
    double at(std::size_t i) const noexcept {
        return points > 1 ? lo + spacing() * static_cast<double>(i) : lo;
    }
};

// Which time derivative of the reserve impact enters the price drift.
//   DefinitionConsistent: d/dt of  int lvr - int mean_control,  i.e. lvr - mean_control.
//   AsPrinted:            +mean_control, the rate used in the printed drift formula.
enum class DeltaConvention { DefinitionConsistent, AsPrinted };

// Trader running reward.
//   DynamicsConsistent: drift of Y + X P implied by the inventory dynamics.
//   AsPrinted:          the printed reward, which carries an extra alpha*P(1-S) term.
enum class RewardForm { DynamicsConsistent, AsPrinted };

struct ModelParams {
    // pool
    double x0 = 100.0;
    double y0 = 100.0;
    double tau = 0.003;
    // traders
    double trader_sigma = 0.3;
    double trader_terminal_weight = 1.0;
    bool slippage = true;
    // liquidity provider
    double lp_sigma_x = 0.0;
    double lp_sigma_y = 0.0;
    double lp_sigma_z = 0.0;
    double lp_terminal_weight = 1.0;
    double lp_initial_x = 1.0;
    double lp_initial_y = 0.0;
    double lp_initial_z = 0.0;
    // market
    double external_sigma = 0.2;
    double common_sigma = 0.0;
    bool arbitrage = true;
    // switches
    bool coupling = true;
    DeltaConvention delta_convention = DeltaConvention::DefinitionConsistent;
    RewardForm reward_form = RewardForm::DynamicsConsistent;

    double k0() const noexcept { return x0 * y0; }
    double phi() const noexcept { return 1.0 - tau; }
};

/// Throws InvalidParameter on out-of-range values.
void validate(const ModelParams& params);
void validate(const TimeGrid& grid);
void validate(const UniformGrid& grid, const char* what);

} // namespace ammfg
