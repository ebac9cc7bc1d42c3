#include <CLI11.hpp>
#include <iostream>

#include "steti/commands.hpp"

using namespace steti;

int main(int argc, char** argv) {
    CLI::App app{"steti-forecast: event-lifetime trend forecasting with censoring-bias correction"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> jobs_override;
    std::optional<std::string> out_override;
    app.add_option("--config", config_path, "path to the JSON run configuration");
    app.add_option("--seed", seed_override, "root random seed (overrides config)");
    app.add_option("--jobs", jobs_override, "max parallel workers (overrides config)");
    app.add_option("--out", out_override, "output directory (overrides config)");

    auto* ingest = app.add_subcommand("ingest", "validate the input files and summarize the dataset");
    auto* steti_fit = app.add_subcommand(
        "steti-fit", "closed-form trend fit on failure times, plugged back into the launch curve");
    auto* train = app.add_subcommand("train", "run the two-stage transfer pipeline over the config grid");
    auto* tune = app.add_subcommand("tune", "sequential model-based hyperparameter search for one cell");
    auto* benchmark =
        app.add_subcommand("benchmark", "regression baseline with VIF-gated feature search");
    auto* scenario = app.add_subcommand("scenario", "what-if sweeps against a trained checkpoint");

    std::optional<std::string> phase_override;
    train->add_option("--phase", phase_override, "time_only or time_plus (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        cli::RunConfig config =
            config_path.empty() ? cli::default_run_config() : cli::load_run_config(config_path);
        if (seed_override) config.seed = *seed_override;
        if (jobs_override) config.jobs = *jobs_override;
        if (out_override) config.output_dir = *out_override;
        if (phase_override) config.phase.phases = {pipeline::phase_from_string(*phase_override)};

        if (*ingest) return cli::cmd_ingest(config);
        if (*steti_fit) return cli::cmd_steti_fit(config);
        if (*train) return cli::cmd_train(config);
        if (*tune) return cli::cmd_tune(config);
        if (*benchmark) return cli::cmd_benchmark(config);
        if (*scenario) return cli::cmd_scenario(config);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
