#include "ammfg/cli.hpp"
#include "ammfg/config.hpp"
#include "ammfg/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Constant-product AMM mean-field game simulator and solver", "ammfg"};
    app.set_version_flag("--version", std::string(AMMFG_VERSION));
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    bool timing = false;

    for (const auto& name : ammfg::subcommand_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Config file (section.key = value)");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Overrides run.seed");
        sub->add_option("--override", overrides, "section.key=value, applied after the file")
            ->allow_extra_args(false);
        sub->add_flag("--timing", timing, "Record runtime_seconds in summary.json");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ammfg::kExitOk : ammfg::kExitConfigError;
    }
    const std::string name = app.get_subcommands().front()->get_name();

    ammfg::SimConfig config;
    try {
        if (!config_path.empty()) {
            config = ammfg::load_config(config_path);
        }
        for (const auto& o : overrides) {
            ammfg::apply_override(config, o);
        }
        if (app.get_subcommands().front()->count("--seed") > 0) {
            config.run.seed = seed;
        }
    } catch (const ammfg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ammfg::kExitConfigError;
    }

    try {
        return ammfg::run_subcommand(name, config, out_dir, std::cout, {timing});
    } catch (const ammfg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ammfg::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ammfg::kExitFailure;
    }
}
