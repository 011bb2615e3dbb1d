#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "isaacs/config.hpp"
#include "isaacs/error.hpp"
#include "isaacs/experiment.hpp"

namespace {

int run(const std::string& sub, const std::string& config, const isaacs::RunOverrides& ov) {
    isaacs::ExperimentConfig cfg;
    try {
        cfg = isaacs::load_config(config);
    } catch (const isaacs::ConfigError& e) {
        if (e.line() > 0)
            std::cerr << "error: " << config << ": " << e.what() << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const isaacs::RunSummary s = isaacs::run_experiment(cfg, sub, ov, std::cout);
    return s.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lower and upper values of stochastic differential games with BSDE payoffs"};
    app.require_subcommand(1);

    std::string config;
    int threads = -1;
    std::uint64_t seed = 0;
    std::string out;
    std::string chosen;

    for (const std::string& name : isaacs::experiment_subcommands()) {
        CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' checks");
        sub->add_option("--config", config, "experiment config (INI)")->required();
        sub->add_option("--threads", threads, "worker cap (0: all cores)")->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "seed override");
        sub->add_option("--out", out, "output directory (overrides ISAACS_LAB_OUT and the config)");
        sub->callback([&chosen, name] { chosen = name; });
    }
    app.add_subcommand("list-games", "list built-in game families")->callback([&chosen] { chosen = "list-games"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (chosen == "list-games") {
        isaacs::print_games(std::cout);
        return 0;
    }

    isaacs::RunOverrides ov;
    if (threads >= 0) ov.threads = threads;
    if (app.get_subcommand(chosen)->count("--seed")) ov.seed = seed;
    if (!out.empty()) ov.out_dir = out;
    try {
        return run(chosen, config, ov);
    } catch (const isaacs::BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
