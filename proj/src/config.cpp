#include "ammfg/config.hpp"

#include "ammfg/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>

namespace ammfg {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError(key, "expected a finite number, got '" + std::string(text) + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, std::string_view text) {
    text = trim(text);
    if (text == "true") {
        return true;
    }
    if (text == "false") {
        return false;
    }
    throw ConfigError(key, "expected true or false, got '" + std::string(text) + "'");
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, std::string_view text, Parse parse) {
    std::vector<T> out;
    text = trim(text);
    if (text.empty()) {
        return out;
    }
    while (true) {
        const auto comma = text.find(',');
        out.push_back(static_cast<T>(parse(key, text.substr(0, comma))));
        if (comma == std::string_view::npos) {
            break;
        }
        text.remove_prefix(comma + 1);
    }
    return out;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

template <class T, class Format>
std::string format_list(const std::vector<T>& values, Format format) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += format(values[i]);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<void(SimConfig&, std::string_view)> set;
    std::function<std::string(const SimConfig&)> get;
};

using DoubleRef = double& (*)(SimConfig&);
using CountRef = std::size_t& (*)(SimConfig&);
using FlagRef = bool& (*)(SimConfig&);

Field number(const char* key, DoubleRef ref) {
    return {key, [ref, key](SimConfig& c, std::string_view v) { ref(c) = parse_double(key, v); },
            [ref](const SimConfig& c) { return format_double(ref(const_cast<SimConfig&>(c))); }};
}

Field count(const char* key, CountRef ref) {
    return {key,
            [ref, key](SimConfig& c, std::string_view v) {
                ref(c) = static_cast<std::size_t>(parse_u64(key, v));
            },
            [ref](const SimConfig& c) { return std::to_string(ref(const_cast<SimConfig&>(c))); }};
}

Field flag(const char* key, FlagRef ref) {
    return {key, [ref, key](SimConfig& c, std::string_view v) { ref(c) = parse_bool(key, v); },
            [ref](const SimConfig& c) {
                return std::string(ref(const_cast<SimConfig&>(c)) ? "true" : "false");
            }};
}

template <class E>
Field choice(const char* key, E& (*ref)(SimConfig&),
             std::vector<std::pair<std::string, E>> names) {
    return {key,
            [ref, key, names](SimConfig& c, std::string_view v) {
                v = trim(v);
                std::string allowed;
                for (const auto& [name, value] : names) {
                    if (v == name) {
                        ref(c) = value;
                        return;
                    }
                    allowed += (allowed.empty() ? "" : ", ") + name;
                }
                throw ConfigError(key, "expected one of " + allowed + ", got '" +
                                           std::string(v) + "'");
            },
            [ref, names](const SimConfig& c) {
                const E value = ref(const_cast<SimConfig&>(c));
                for (const auto& [name, v] : names) {
                    if (v == value) {
                        return name;
                    }
                }
                return std::string("?");
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        number("pool.x0", [](SimConfig& c) -> double& { return c.pool.x0; }),
        number("pool.y0", [](SimConfig& c) -> double& { return c.pool.y0; }),
        number("pool.tau", [](SimConfig& c) -> double& { return c.pool.tau; }),

        number("trader.sigma", [](SimConfig& c) -> double& { return c.trader.sigma; }),
        number("trader.terminal_weight",
               [](SimConfig& c) -> double& { return c.trader.terminal_weight; }),
        flag("trader.slippage", [](SimConfig& c) -> bool& { return c.trader.slippage; }),
        number("trader.control_min", [](SimConfig& c) -> double& { return c.trader.control_min; }),
        number("trader.control_max", [](SimConfig& c) -> double& { return c.trader.control_max; }),
        count("trader.control_points",
              [](SimConfig& c) -> std::size_t& { return c.trader.control_points; }),
        number("trader.initial_mean", [](SimConfig& c) -> double& { return c.trader.initial_mean; }),
        number("trader.initial_sd", [](SimConfig& c) -> double& { return c.trader.initial_sd; }),
        choice<RewardForm>("trader.reward_form",
                           [](SimConfig& c) -> RewardForm& { return c.trader.reward_form; },
                           {{"dynamics", RewardForm::DynamicsConsistent},
                            {"printed", RewardForm::AsPrinted}}),

        number("lp.sigma_x", [](SimConfig& c) -> double& { return c.lp.sigma_x; }),
        number("lp.sigma_y", [](SimConfig& c) -> double& { return c.lp.sigma_y; }),
        number("lp.sigma_z", [](SimConfig& c) -> double& { return c.lp.sigma_z; }),
        number("lp.terminal_weight", [](SimConfig& c) -> double& { return c.lp.terminal_weight; }),
        number("lp.initial_x", [](SimConfig& c) -> double& { return c.lp.initial_x; }),
        number("lp.initial_y", [](SimConfig& c) -> double& { return c.lp.initial_y; }),
        number("lp.initial_z", [](SimConfig& c) -> double& { return c.lp.initial_z; }),
        number("lp.control_min", [](SimConfig& c) -> double& { return c.lp.control_min; }),
        number("lp.control_max", [](SimConfig& c) -> double& { return c.lp.control_max; }),
        count("lp.segments", [](SimConfig& c) -> std::size_t& { return c.lp.segments; }),
        Field{"lp.control",
              [](SimConfig& c, std::string_view v) {
                  c.lp.control = parse_list<double>("lp.control", v, parse_double);
              },
              [](const SimConfig& c) { return format_list(c.lp.control, format_double); }},

        number("market.sigma", [](SimConfig& c) -> double& { return c.market.sigma; }),
        number("market.common_sigma", [](SimConfig& c) -> double& { return c.market.common_sigma; }),

        flag("arbitrage.enabled", [](SimConfig& c) -> bool& { return c.arbitrage.enabled; }),

        flag("model.coupling", [](SimConfig& c) -> bool& { return c.model.coupling; }),
        choice<DeltaConvention>(
            "model.delta_convention",
            [](SimConfig& c) -> DeltaConvention& { return c.model.delta_convention; },
            {{"definition", DeltaConvention::DefinitionConsistent},
             {"printed", DeltaConvention::AsPrinted}}),

        number("grid.horizon", [](SimConfig& c) -> double& { return c.grid.horizon; }),
        count("grid.steps", [](SimConfig& c) -> std::size_t& { return c.grid.steps; }),
        number("grid.state_min", [](SimConfig& c) -> double& { return c.grid.state_min; }),
        number("grid.state_max", [](SimConfig& c) -> double& { return c.grid.state_max; }),
        count("grid.state_points", [](SimConfig& c) -> std::size_t& { return c.grid.state_points; }),
        count("grid.noise_nodes", [](SimConfig& c) -> std::size_t& { return c.grid.noise_nodes; }),
        number("grid.overflow_tol", [](SimConfig& c) -> double& { return c.grid.overflow_tol; }),

        number("solver.damping", [](SimConfig& c) -> double& { return c.solver.damping; }),
        number("solver.tol", [](SimConfig& c) -> double& { return c.solver.tol; }),
        count("solver.max_iter", [](SimConfig& c) -> std::size_t& { return c.solver.max_iter; }),
        number("solver.initial_step", [](SimConfig& c) -> double& { return c.solver.initial_step; }),
        number("solver.step_tol", [](SimConfig& c) -> double& { return c.solver.step_tol; }),
        count("solver.search_budget",
              [](SimConfig& c) -> std::size_t& { return c.solver.search_budget; }),

        Field{"harness.n_list",
              [](SimConfig& c, std::string_view v) {
                  c.harness.n_list = parse_list<std::size_t>("harness.n_list", v, parse_u64);
              },
              [](const SimConfig& c) {
                  return format_list(c.harness.n_list, [](std::size_t n) { return std::to_string(n); });
              }},
        count("harness.replications",
              [](SimConfig& c) -> std::size_t& { return c.harness.replications; }),
        count("harness.population",
              [](SimConfig& c) -> std::size_t& { return c.harness.population; }),
        choice<NashEstimator>("harness.estimator",
                              [](SimConfig& c) -> NashEstimator& { return c.harness.estimator; },
                              {{"conditional", NashEstimator::ConditionalValue},
                               {"realized", NashEstimator::RealizedPath}}),
        flag("harness.common_random_numbers",
             [](SimConfig& c) -> bool& { return c.harness.common_random_numbers; }),

        number("lvr.sigma", [](SimConfig& c) -> double& { return c.lvr.sigma; }),
        number("lvr.horizon", [](SimConfig& c) -> double& { return c.lvr.horizon; }),
        number("lvr.p0", [](SimConfig& c) -> double& { return c.lvr.p0; }),
        number("lvr.k", [](SimConfig& c) -> double& { return c.lvr.k; }),
        count("lvr.paths", [](SimConfig& c) -> std::size_t& { return c.lvr.paths; }),
        Field{"lvr.steps",
              [](SimConfig& c, std::string_view v) {
                  c.lvr.steps = parse_list<std::size_t>("lvr.steps", v, parse_u64);
              },
              [](const SimConfig& c) {
                  return format_list(c.lvr.steps, [](std::size_t n) { return std::to_string(n); });
              }},

        count("arbcheck.draws", [](SimConfig& c) -> std::size_t& { return c.arbcheck.draws; }),
        count("arbcheck.grid_points",
              [](SimConfig& c) -> std::size_t& { return c.arbcheck.grid_points; }),

        Field{"run.seed",
              [](SimConfig& c, std::string_view v) { c.run.seed = parse_u64("run.seed", v); },
              [](const SimConfig& c) { return std::to_string(c.run.seed); }},
        count("run.threads", [](SimConfig& c) -> std::size_t& { return c.run.threads; }),
    };
    return table;
}

const Field& find_field(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            return f;
        }
    }
    throw ConfigError(key, "unknown key");
}

void require(bool ok, const char* key, const std::string& reason) {
    if (!ok) {
        throw ConfigError(key, reason);
    }
}

bool nonneg(double v) { return v >= 0.0; }

std::pair<std::string, std::string> split_assignment(std::string_view line, std::size_t line_no) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
        throw ConfigError("", "line " + std::to_string(line_no) + ": missing key");
    }
    return {key, std::string(trim(line.substr(eq + 1)))};
}

} // namespace

void validate(const SimConfig& c) {
    require(c.pool.x0 > 0.0, "pool.x0", "must be positive");
    require(c.pool.y0 > 0.0, "pool.y0", "must be positive");
    require(c.pool.tau >= 0.0 && c.pool.tau < 1.0, "pool.tau", "must lie in [0, 1)");

    require(nonneg(c.trader.sigma), "trader.sigma", "must be nonnegative");
    require(nonneg(c.trader.terminal_weight), "trader.terminal_weight", "must be nonnegative");
    require(c.trader.control_points >= 1, "trader.control_points", "must be at least 1");
    require(c.trader.control_min <= c.trader.control_max, "trader.control_max",
            "must not be below trader.control_min");
    require(c.trader.control_points == 1 || c.trader.control_min < c.trader.control_max,
            "trader.control_max", "must exceed trader.control_min when several atoms are used");
    require(nonneg(c.trader.initial_sd), "trader.initial_sd", "must be nonnegative");
    require(c.trader.initial_mean >= c.grid.state_min && c.trader.initial_mean <= c.grid.state_max,
            "trader.initial_mean", "must lie inside the state grid");

    require(nonneg(c.lp.sigma_x), "lp.sigma_x", "must be nonnegative");
    require(nonneg(c.lp.sigma_y), "lp.sigma_y", "must be nonnegative");
    require(nonneg(c.lp.sigma_z), "lp.sigma_z", "must be nonnegative");
    require(nonneg(c.lp.terminal_weight), "lp.terminal_weight", "must be nonnegative");
    require(c.lp.control_min <= c.lp.control_max, "lp.control_max",
            "must not be below lp.control_min");
    require(c.lp.segments >= 1, "lp.segments", "must be at least 1");
    require(c.lp.segments <= c.grid.steps, "lp.segments", "must not exceed grid.steps");
    require(c.lp.control.empty() || c.lp.control.size() == c.lp.segments, "lp.control",
            "needs exactly lp.segments values");
    for (double v : c.lp.control) {
        require(v >= c.lp.control_min && v <= c.lp.control_max, "lp.control",
                "values must lie in [lp.control_min, lp.control_max]");
    }

    require(nonneg(c.market.sigma), "market.sigma", "must be nonnegative");
    require(nonneg(c.market.common_sigma), "market.common_sigma", "must be nonnegative");

    require(c.grid.horizon > 0.0, "grid.horizon", "must be positive");
    require(c.grid.steps >= 1, "grid.steps", "must be at least 1");
    require(c.grid.state_min < c.grid.state_max, "grid.state_max", "must exceed grid.state_min");
    require(c.grid.state_points >= 2, "grid.state_points", "must be at least 2");
    require(c.grid.noise_nodes >= 1 && c.grid.noise_nodes <= 64, "grid.noise_nodes",
            "must lie in [1, 64]");
    require(nonneg(c.grid.overflow_tol), "grid.overflow_tol", "must be nonnegative");

    require(c.solver.damping > 0.0 && c.solver.damping <= 1.0, "solver.damping",
            "must lie in (0, 1]");
    require(c.solver.tol > 0.0, "solver.tol", "must be positive");
    require(c.solver.max_iter >= 1, "solver.max_iter", "must be at least 1");
    require(c.solver.initial_step > 0.0, "solver.initial_step", "must be positive");
    require(c.solver.step_tol > 0.0, "solver.step_tol", "must be positive");
    require(c.solver.search_budget >= 1, "solver.search_budget", "must be at least 1");

    require(!c.harness.n_list.empty(), "harness.n_list", "must not be empty");
    for (std::size_t i = 0; i < c.harness.n_list.size(); ++i) {
        require(c.harness.n_list[i] >= 1 && (i == 0 || c.harness.n_list[i] > c.harness.n_list[i - 1]),
                "harness.n_list", "must be positive and strictly ascending");
    }
    require(c.harness.replications >= 1, "harness.replications", "must be at least 1");
    require(c.harness.population >= 1, "harness.population", "must be at least 1");

    require(nonneg(c.lvr.sigma), "lvr.sigma", "must be nonnegative");
    require(c.lvr.horizon > 0.0, "lvr.horizon", "must be positive");
    require(c.lvr.p0 > 0.0, "lvr.p0", "must be positive");
    require(c.lvr.k > 0.0, "lvr.k", "must be positive");
    require(c.lvr.paths >= 1, "lvr.paths", "must be at least 1");
    require(!c.lvr.steps.empty(), "lvr.steps", "must not be empty");
    for (std::size_t s : c.lvr.steps) {
        require(s >= 1, "lvr.steps", "entries must be at least 1");
    }

    require(c.arbcheck.draws >= 1, "arbcheck.draws", "must be at least 1");
    require(c.arbcheck.grid_points >= 3, "arbcheck.grid_points", "must be at least 3");
}

SimConfig parse_config(const std::string& text) {
    SimConfig config;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto [key, value] = split_assignment(line, line_no);
        const Field& field = find_field(key);
        if (!seen.insert(key).second) {
            throw ConfigError(key, "duplicate key");
        }
        field.set(config, value);
    }
    validate(config);
    return config;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("", "cannot read config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void apply_override(SimConfig& config, const std::string& assignment) {
    const auto [key, value] = split_assignment(assignment, 0);
    find_field(key).set(config, value);
    validate(config);
}

std::string canonical_config(const SimConfig& config) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        const std::string sec = f.key.substr(0, f.key.find('.'));
        if (!section.empty() && sec != section) {
            out += '\n';
        }
        section = sec;
        out += f.key + " = " + f.get(config) + '\n';
    }
    return out;
}

std::string config_hash(const SimConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ModelParams model_params(const SimConfig& c) {
    ModelParams p;
    p.x0 = c.pool.x0;
    p.y0 = c.pool.y0;
    p.tau = c.pool.tau;
    p.trader_sigma = c.trader.sigma;
    p.trader_terminal_weight = c.trader.terminal_weight;
    p.slippage = c.trader.slippage;
    p.lp_sigma_x = c.lp.sigma_x;
    p.lp_sigma_y = c.lp.sigma_y;
    p.lp_sigma_z = c.lp.sigma_z;
    p.lp_terminal_weight = c.lp.terminal_weight;
    p.lp_initial_x = c.lp.initial_x;
    p.lp_initial_y = c.lp.initial_y;
    p.lp_initial_z = c.lp.initial_z;
    p.external_sigma = c.market.sigma;
    p.common_sigma = c.market.common_sigma;
    p.arbitrage = c.arbitrage.enabled;
    p.coupling = c.model.coupling;
    p.delta_convention = c.model.delta_convention;
    p.reward_form = c.trader.reward_form;
    return p;
}

TimeGrid time_grid(const SimConfig& c) { return {c.grid.horizon, c.grid.steps}; }

std::vector<double> lp_segments(const SimConfig& c) {
    return c.lp.control.empty() ? std::vector<double>(c.lp.segments, 0.0) : c.lp.control;
}

MfgProblem mfg_problem(const SimConfig& c) {
    MfgProblem p;
    p.params = model_params(c);
    p.time = time_grid(c);
    p.states = {c.grid.state_min, c.grid.state_max, c.grid.state_points};
    p.controls = {c.trader.control_min, c.trader.control_max, c.trader.control_points};
    p.noise_nodes = c.grid.noise_nodes;
    p.overflow_tol = c.grid.overflow_tol;
    p.initial_law = discretized_normal(p.states, c.trader.initial_mean, c.trader.initial_sd);
    p.lp_control = expand_lp_control(lp_segments(c), c.grid.steps);
    return p;
}

SolverOptions solver_options(const SimConfig& c) {
    return {c.solver.damping, c.solver.tol, c.solver.max_iter};
}

SearchOptions search_options(const SimConfig& c) {
    SearchOptions s;
    s.segments = c.lp.segments;
    s.lp_min = c.lp.control_min;
    s.lp_max = c.lp.control_max;
    s.initial_step = c.solver.initial_step;
    s.step_tol = c.solver.step_tol;
    s.budget = c.solver.search_budget;
    return s;
}

NashOptions nash_options(const SimConfig& c) {
    NashOptions o;
    o.replications = c.harness.replications;
    o.estimator = c.harness.estimator;
    o.common_random_numbers = c.harness.common_random_numbers;
    o.threads = c.run.threads;
    return o;
}

LvrExperimentSpec lvr_spec(const SimConfig& c, std::size_t steps) {
    LvrExperimentSpec s;
    s.sigma = c.lvr.sigma;
    s.horizon = c.lvr.horizon;
    s.steps = steps;
    s.paths = c.lvr.paths;
    s.p0 = c.lvr.p0;
    s.k = c.lvr.k;
    s.seed = c.run.seed;
    s.threads = c.run.threads;
    return s;
}

} // namespace ammfg
