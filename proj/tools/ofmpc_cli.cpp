#include <CLI11.hpp>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
    using namespace ofmpc::cli;
    CLI::App app{"Offset-free MPC with a learned steady-state disturbance map"};
    app.require_subcommand(1);

    std::filesystem::path check_config;
    auto* check = app.add_subcommand("check", "Verify the estimator and offset-free conditions");
    check->add_option("config", check_config, "Config file")->required()->check(CLI::ExistingFile);

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run the configured scenario and write CSV logs");
    run->add_option("config", run_opts.config, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", run_opts.mode, "nominal, learned or both")
        ->check(CLI::IsMember({"nominal", "learned", "both"}));
    run->add_option("--out", run_opts.out, "Output directory");
    run->add_option("--grnn", run_opts.grnn, "GRNN sample file for learned mode")
        ->check(CLI::ExistingFile);

    SweepOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Visit setpoints until steady and harvest samples");
    sweep->add_option("config", sweep_opts.config, "Config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--setpoints", sweep_opts.setpoints, "Absolute setpoints, one per line")
        ->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_opts.out, "Output directory");
    sweep->add_option("--workers", sweep_opts.workers, "Parallel sweep chunks (nominal, no events)")
        ->check(CLI::PositiveNumber);

    FitOptions fit_opts;
    auto* fit = app.add_subcommand("grnn-fit", "Fit a GRNN to a sample file");
    fit->add_option("samples", fit_opts.samples, "Sample file")->required()->check(CLI::ExistingFile);
    fit->add_option("--sigma", fit_opts.sigma, "'auto' or a positive spread");
    fit->add_option("--out", fit_opts.out, "Output directory");
    fit->add_option("--grid", fit_opts.grid, "Grid points per input dimension")
        ->check(CLI::Range(2, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (check->parsed()) {
        return cmd_check(check_config);
    }
    if (run->parsed()) {
        return cmd_run(run_opts);
    }
    if (sweep->parsed()) {
        return cmd_sweep(sweep_opts);
    }
    return cmd_grnn_fit(fit_opts);
}
