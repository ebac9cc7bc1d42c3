#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "steti/pipeline.hpp"
#include "steti/scenario.hpp"

namespace steti::cli {

// One structured config file drives every command; each field has a default
// and every CLI flag overrides its config key.
struct RunConfig {
    std::filesystem::path missions_path = "missions.csv";
    std::filesystem::path funding_path = "funding.csv";
    std::filesystem::path deflator_path = "deflator.csv";
    std::filesystem::path output_dir = "out";

    std::optional<double> observation_date;  // default: latest date in the data
    std::optional<int> deflator_base_year;   // default: latest deflator year
    std::uint64_t seed = 0;
    int jobs = 1;

    struct PhaseSettings {
        std::vector<pipeline::Phase> phases = {pipeline::Phase::time_only};
        std::vector<double> split_ratios = {0.75, 0.85};
        std::vector<int> batch_sizes = {32, 64, 96, 0};  // 0 = full
        bool tuning = false;
        int tune_max_trials = 100;
        int max_epochs = 5000;
        int patience = 1000;
        int hidden_size = 16;
        bool export_windows = false;
    } phase;

    struct TuneSettings {
        pipeline::Phase phase = pipeline::Phase::time_only;
        pipeline::Stage stage = pipeline::Stage::failure;
        double split_ratio = 0.75;
        int batch_size = 32;
        int max_trials = 100;
        int max_epochs = 5000;
        int patience = 1000;
        int hidden_size = 16;
        bool resume = true;
    } tune;

    struct TrendSettings {
        double epoch = 1959.0;
        int moving_average_window = 15;
        int curve_samples = 100;
    } trend;

    struct BenchmarkSettings {
        double vif_threshold = 5.0;
        int window_lo = 1;
        int window_hi = 20;
        int k_folds = 5;
        std::optional<double> year_lo;  // optional launch-year restriction
        std::optional<double> year_hi;
        std::optional<std::filesystem::path> lstm_checkpoint;
    } benchmark;

    struct ScenarioSettings {
        std::filesystem::path checkpoint;
        std::vector<scenario::ScenarioSpec> specs;  // default: a log-spaced mass sweep
    } scen;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig default_run_config();

}  // namespace steti::cli
