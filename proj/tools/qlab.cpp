// Command-line harness: loads a config document, runs its jobs and writes one
// CSV plus one JSON artifact per job. Subcommands filter the job list to a
// single operation; `run` executes everything.
//
// Exit codes: 0 all pass, 1 acceptance failure, 2 usage/config, 3 numerical.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "qlab/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for classical and quantum statistical experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    double tolerance_scale = 1.0;
    unsigned seed = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration document (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--jobs", jobs, "parallel job count")->check(CLI::PositiveNumber);
        cmd->add_option("--tolerance-scale", tolerance_scale, "scale factor on pass thresholds")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "seed for randomized test-word generation");
    };

    CLI::App* run = app.add_subcommand("run", "execute every job in the config");
    add_common(run);
    const std::vector<std::string> named{"hellinger",       "canonical-measure", "deficiency",
                                         "cocycle",         "canonical-state",   "suff-check",
                                         "lan-verify",      "qubit-demo"};
    for (const auto& name : named)
        add_common(app.add_subcommand(name, "run only '" + name + "' jobs"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    qlab::cli::RunOptions opt;
    opt.out_dir = out_dir;
    opt.parallel_jobs = jobs;
    opt.tolerance_scale = tolerance_scale;
    opt.seed = seed;
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub != "run") opt.only_command = sub;

    try {
        const auto cfg = qlab::cli::load_config(config_path);
        return qlab::cli::run_all(cfg, opt);
    } catch (const qlab::cli::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
