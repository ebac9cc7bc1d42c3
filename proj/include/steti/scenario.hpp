#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "steti/pipeline.hpp"

namespace steti::scenario {

enum class Axis { launch_mass, country, destination, contact_type };

std::string to_string(Axis a);
Axis axis_from_string(const std::string& s);

struct ScenarioSpec {
    std::string baseline;  // record name; empty picks the latest launch
    Axis axis = Axis::launch_mass;
    // numeric sweeps
    double lo = 1.0;
    double hi = 50000.0;
    int count = 50;
    bool log_spacing = true;  // the mass axis spans decades
    // categorical sweeps
    std::vector<std::string> labels;
};

struct ScenarioRow {
    std::string axis_label;     // numeric value or category label
    double pred_log2 = 0.0;
    double pred_years = 0.0;    // exp2 of the log2 prediction
    bool extrapolation = false; // outside the training range / unseen label
    bool is_baseline = false;
};

struct ScenarioResult {
    std::string baseline_name;
    std::vector<ScenarioRow> rows;  // baseline first when not part of the sweep
};

// Hypothetical records: the baseline with only the swept axis changed.
std::vector<data::MissionRecord> build_scenarios(const ScenarioSpec& spec,
                                                 const data::MissionRecord& baseline);

// Deterministic sweep over an immutable checkpoint. The hypotheticals reuse
// the baseline record's launch window as sequence context.
ScenarioResult predict_scenarios(const ScenarioSpec& spec, const pipeline::ModelBundle& bundle,
                                 const std::vector<data::MissionRecord>& records,
                                 const std::vector<data::FundingSeries>& funding);

void write_scenario_csv(const std::filesystem::path& path, const ScenarioResult& result);

}  // namespace steti::scenario
