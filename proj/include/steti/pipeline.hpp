#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steti/dataset.hpp"
#include "steti/features.hpp"
#include "steti/hypertune.hpp"
#include "steti/neuralnet.hpp"

namespace steti::pipeline {

enum class Phase { time_only, time_plus };
enum class Stage { failure, launch };

std::string to_string(Phase p);
std::string to_string(Stage s);
Phase phase_from_string(const std::string& s);

struct PhaseConfig {
    Phase phase = Phase::time_only;
    std::vector<double> split_ratios = {0.75, 0.85};
    std::vector<int> batch_sizes = {32, 64, 96, 0};  // 0 = full training set
    bool tuning = false;      // adds tuned rows next to the default rows
    int tune_max_trials = 100;
    int max_epochs = 5000;
    int patience = 1000;
    int hidden_size = 16;
    std::uint64_t seed = 0;
    int jobs = 1;
};

// Model-ready tensors for one (stage, hyperparams, split) combination.
// Examples are owned by the record at the window end; the owner's position
// in the chronological order decides its partition, so lookback may cross
// partition boundaries but targets never leak.
struct StageDataset {
    std::vector<features::WindowedExample> train, val, test;
    std::vector<features::WindowedExample> all_owners;  // every full-window record, for inference
    features::ScalerParams scalers;
    std::array<features::Vocabulary, 3> vocabs;  // destination, contact_type, country
    features::SplitSpec split;
};

StageDataset build_stage_dataset(Stage stage, Phase phase,
                                 const std::vector<data::MissionRecord>& records,
                                 const std::vector<data::FundingSeries>& funding, const HyperParams& hp,
                                 double split_ratio,
                                 const std::map<std::string, double>* transfer_targets);

// A checkpoint: everything needed to rebuild inputs and predict.
struct ModelBundle {
    Phase phase = Phase::time_only;
    Stage stage = Stage::failure;
    HyperParams hyperparams;
    double split_ratio = 0.75;
    int batch_size = 32;
    bool tuned = false;
    int hidden_size = 16;
    nn::ModelConfig config;
    nn::ModelParams params;
    features::ScalerParams scalers;
    std::array<features::Vocabulary, 3> vocabs;
};

inline constexpr int kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_checkpoint(const std::filesystem::path& path);

struct CellResult {
    bool tuned = false;
    double split_ratio = 0.75;
    int batch_size = 32;  // 0 = full
    HyperParams hyperparams;
    double test_rmse = 0.0;
    ModelBundle bundle;
    std::vector<tune::Trial> tune_ledger;  // empty for default cells
};

struct StageResult {
    Stage stage = Stage::failure;
    std::vector<CellResult> cells;  // in documented sweep order
    int best_index = -1;
    // best model's predictions per owner record, exact doubles used as
    // stage-2 targets (failure stage) or final outputs (launch stage)
    std::map<std::string, double> predictions;

    const CellResult& best() const { return cells.at(static_cast<std::size_t>(best_index)); }
};

StageResult run_stage(Stage stage, const PhaseConfig& cfg,
                      const std::vector<data::MissionRecord>& records,
                      const std::vector<data::FundingSeries>& funding,
                      const std::map<std::string, double>* transfer_targets);

// One model on one (hyperparams, split ratio, batch size) cell; returns the
// bundle and its held-out test RMSE. The building block behind run_stage and
// the standalone tuning command.
std::pair<ModelBundle, double> train_single_cell(Stage stage, const PhaseConfig& cfg,
                                                 const std::vector<data::MissionRecord>& records,
                                                 const std::vector<data::FundingSeries>& funding,
                                                 const std::map<std::string, double>* transfer_targets,
                                                 const HyperParams& hp, double split_ratio,
                                                 int batch_size, std::uint64_t seed);

struct PhaseReport {
    Phase phase = Phase::time_only;
    StageResult stage1;  // failure-time models
    StageResult stage2;  // launch-time models (the deliverable predictor)
};

// Stage 1 on failure-ordered data, transfer of the best model's predictions,
// then Stage 2 on launch-ordered data with the transferred targets.
PhaseReport run_phase(const PhaseConfig& cfg, const std::vector<data::MissionRecord>& records,
                      const std::vector<data::FundingSeries>& funding);

struct ComparisonReport {
    double rmse_a = 0.0;
    double rmse_b = 0.0;
    int n_records = 0;
    int winner = 0;  // 0 = a, 1 = b
};

// Both models are evaluated on the records held out by BOTH splits (test
// partitions are chronological suffixes, so the intersection is never empty).
ComparisonReport compare_models(const ModelBundle& a, const ModelBundle& b,
                                const std::vector<data::MissionRecord>& records,
                                const std::vector<data::FundingSeries>& funding);

// Featurized rows for every record with a full lookback window, built with
// the bundle's fitted scalers and vocabularies (no refitting).
std::vector<features::WindowedExample> build_examples(const ModelBundle& bundle,
                                                      const std::vector<data::MissionRecord>& records,
                                                      const std::vector<data::FundingSeries>& funding);

// Predicted log2 lifetime per record with a full window; used for transfer,
// scenario work and active-record forecasts.
std::map<std::string, double> predict_records(const ModelBundle& bundle,
                                              const std::vector<data::MissionRecord>& records,
                                              const std::vector<data::FundingSeries>& funding);

}  // namespace steti::pipeline
