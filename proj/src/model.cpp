#include "ammfg/model.hpp"

#include "ammfg/errors.hpp"

#include <cmath>
#include <string>

namespace ammfg {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw InvalidParameter(what);
    }
}

bool nonneg(double v) { return v >= 0.0 && std::isfinite(v); }

} // namespace

void validate(const ModelParams& p) {
    require(p.x0 > 0.0 && p.y0 > 0.0, "pool reserves must be positive");
    require(p.tau >= 0.0 && p.tau < 1.0, "pool fee must lie in [0, 1)");
    require(nonneg(p.trader_sigma), "trader volatility must be nonnegative");
    require(nonneg(p.trader_terminal_weight), "trader terminal weight must be nonnegative");
    require(nonneg(p.lp_sigma_x) && nonneg(p.lp_sigma_y) && nonneg(p.lp_sigma_z),
            "LP volatilities must be nonnegative");
    require(nonneg(p.lp_terminal_weight), "LP terminal weight must be nonnegative");
    require(nonneg(p.external_sigma), "external price volatility must be nonnegative");
    require(nonneg(p.common_sigma), "common noise volatility must be nonnegative");
}

void validate(const TimeGrid& grid) {
    require(grid.steps >= 1, "time grid needs at least one step");
    require(grid.horizon > 0.0 && std::isfinite(grid.horizon), "horizon must be positive");
}

void validate(const UniformGrid& grid, const char* what) {
    require(grid.points >= 1, std::string(what) + ": grid needs at least one point");
    require(std::isfinite(grid.lo) && std::isfinite(grid.hi) && grid.lo <= grid.hi,
            std::string(what) + ": grid bounds must satisfy lo <= hi");
    require(grid.points == 1 || grid.lo < grid.hi,
            std::string(what) + ": multi-point grid needs lo < hi");
}

} // namespace ammfg
