#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "areaflux/run_config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Laplace transforms, moments and simulation of stochastic areas "
                 "of one-dimensional diffusions"};
    app.require_subcommand(1);

    std::string config_path, out_path, csv_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "run configuration (JSON)")
            ->required();
        sub->add_option("--seed", seed, "override the Monte Carlo seed");
        sub->add_option("--threads", threads, "override the worker thread count");
    };

    CLI::App* run = app.add_subcommand("run", "execute the configured task");
    add_common(run);
    run->add_option("--out", out_path, "write the result document here");
    run->add_option("--csv", csv_path, "write grid sweeps as CSV here");

    CLI::App* verify =
        app.add_subcommand("verify", "cross-check the analytic task against its "
                                     "Monte Carlo mirror");
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (run->parsed())
        return areaflux::cli::run_command(config_path, out_path, csv_path, seed,
                                          threads, std::cout, std::cerr);
    return areaflux::cli::verify_command(config_path, seed, threads, std::cout,
                                         std::cerr);
}
