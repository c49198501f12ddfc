#pragma once

#include "ammfg/arbitrage.hpp"
#include "ammfg/config.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ammfg {

inline constexpr const char* kToolName = "ammfg";

// Exit codes of run_subcommand and the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;

const std::vector<std::string>& subcommand_names();

/// Comment block (tool version, config hash, seed) that starts every output file.
std::string output_header(const SimConfig& config);

struct RunOptions {
    bool timing = false; // record runtime_seconds in summary.json (otherwise null)
};

/// Runs one subcommand, writing its outputs under out_dir (created if needed).
/// Returns 0 on success and 1 on non-convergence or a failed check.
/// print-config writes to `console` and, when out_dir is not empty, config.txt.
int run_subcommand(const std::string& name, const SimConfig& config, const std::string& out_dir,
                   std::ostream& console, const RunOptions& options = {});

struct ArbCheckRow {
    std::size_t draw = 0;
    double r_alpha = 0.0;
    double r_beta = 0.0;
    double m_p = 0.0;
    double tau = 0.0;
    ArbSolution closed_form;
    ArbSolution oracle;
    double discrepancy = 0.0;    // |closed - oracle| profit
    double tolerance = 0.0;      // 1e-6 (1 + |oracle|)
    double band_residual = 0.0;  // relative miss of the active-side price condition
    bool pass = false;
};

/// Randomized closed-form vs oracle comparison; draw i is reproducible from the seed.
std::vector<ArbCheckRow> arb_check(std::size_t draws, std::size_t grid_points,
                                   std::uint64_t seed);

struct LvrCheckRow {
    std::size_t steps = 0;
    double dt = 0.0;
    double mean_abs_gap = 0.0;
    double stderr_abs_gap = 0.0;
    double mean_gap = 0.0;
    double stderr_gap = 0.0;
    double mean_lvr = 0.0;
    double ratio = 0.0; // previous mean_abs_gap / this one (0 on the first row)
};

std::vector<LvrCheckRow> lvr_check(const SimConfig& config);
/// Successive ratios >= 2 and the finest signed mean within 3 standard errors of 0.
bool lvr_check_passes(const std::vector<LvrCheckRow>& rows);

} // namespace ammfg
