#include "steti/config.hpp"

#include <fstream>

#include <json.hpp>

namespace steti::cli {

using json = nlohmann::json;

namespace {

std::vector<int> parse_batch_sizes(const json& j) {
    std::vector<int> out;
    for (const auto& v : j) {
        if (v.is_string()) {
            if (v.get<std::string>() != "full")
                throw ValidationError("config: batch size must be a number or \"full\"");
            out.push_back(0);
        } else {
            int b = v.get<int>();
            if (b < 1) throw ValidationError("config: batch sizes must be >= 1 (or \"full\")");
            out.push_back(b);
        }
    }
    if (out.empty()) throw ValidationError("config: batch_sizes is empty");
    return out;
}

scenario::ScenarioSpec parse_scenario_spec(const json& j) {
    scenario::ScenarioSpec spec;
    spec.baseline = j.value("baseline", std::string());
    spec.axis = scenario::axis_from_string(j.value("axis", "launch_mass"));
    spec.lo = j.value("lo", 1.0);
    spec.hi = j.value("hi", 50000.0);
    spec.count = j.value("count", 50);
    spec.log_spacing = j.value("spacing", "log") != "linear";
    if (j.contains("labels")) spec.labels = j.at("labels").get<std::vector<std::string>>();
    return spec;
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }

    RunConfig c;
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        c.missions_path = p.value("missions", c.missions_path.string());
        c.funding_path = p.value("funding", c.funding_path.string());
        c.deflator_path = p.value("deflator", c.deflator_path.string());
        c.output_dir = p.value("output_dir", c.output_dir.string());
    }
    if (j.contains("observation_date")) c.observation_date = j.at("observation_date").get<double>();
    if (j.contains("deflator_base_year")) c.deflator_base_year = j.at("deflator_base_year").get<int>();
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (c.jobs < 1) throw ValidationError("config: jobs must be >= 1");

    if (j.contains("phase")) {
        const json& p = j.at("phase");
        if (p.contains("phases")) {
            c.phase.phases.clear();
            for (const auto& name : p.at("phases"))
                c.phase.phases.push_back(pipeline::phase_from_string(name.get<std::string>()));
        }
        if (p.contains("split_ratios"))
            c.phase.split_ratios = p.at("split_ratios").get<std::vector<double>>();
        if (p.contains("batch_sizes")) c.phase.batch_sizes = parse_batch_sizes(p.at("batch_sizes"));
        c.phase.tuning = p.value("tuning", c.phase.tuning);
        c.phase.tune_max_trials = p.value("tune_max_trials", c.phase.tune_max_trials);
        c.phase.max_epochs = p.value("max_epochs", c.phase.max_epochs);
        c.phase.patience = p.value("patience", c.phase.patience);
        c.phase.hidden_size = p.value("hidden_size", c.phase.hidden_size);
        c.phase.export_windows = p.value("export_windows", c.phase.export_windows);
    }

    if (j.contains("tune")) {
        const json& t = j.at("tune");
        c.tune.phase = pipeline::phase_from_string(t.value("phase", "time_only"));
        c.tune.stage = t.value("stage", "failure") == std::string("launch") ? pipeline::Stage::launch
                                                                            : pipeline::Stage::failure;
        c.tune.split_ratio = t.value("split_ratio", c.tune.split_ratio);
        if (t.contains("batch_size")) {
            json b = json::array({t.at("batch_size")});
            c.tune.batch_size = parse_batch_sizes(b)[0];
        }
        c.tune.max_trials = t.value("max_trials", c.tune.max_trials);
        c.tune.max_epochs = t.value("max_epochs", c.tune.max_epochs);
        c.tune.patience = t.value("patience", c.tune.patience);
        c.tune.hidden_size = t.value("hidden_size", c.tune.hidden_size);
        c.tune.resume = t.value("resume", c.tune.resume);
    }

    if (j.contains("trend")) {
        const json& t = j.at("trend");
        c.trend.epoch = t.value("epoch", c.trend.epoch);
        c.trend.moving_average_window = t.value("moving_average_window", c.trend.moving_average_window);
        c.trend.curve_samples = t.value("curve_samples", c.trend.curve_samples);
    }

    if (j.contains("benchmark")) {
        const json& b = j.at("benchmark");
        c.benchmark.vif_threshold = b.value("vif_threshold", c.benchmark.vif_threshold);
        c.benchmark.window_lo = b.value("window_lo", c.benchmark.window_lo);
        c.benchmark.window_hi = b.value("window_hi", c.benchmark.window_hi);
        c.benchmark.k_folds = b.value("k_folds", c.benchmark.k_folds);
        if (b.contains("year_lo")) c.benchmark.year_lo = b.at("year_lo").get<double>();
        if (b.contains("year_hi")) c.benchmark.year_hi = b.at("year_hi").get<double>();
        if (b.contains("lstm_checkpoint"))
            c.benchmark.lstm_checkpoint = std::filesystem::path(b.at("lstm_checkpoint").get<std::string>());
    }

    if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        if (s.contains("checkpoint"))
            c.scen.checkpoint = std::filesystem::path(s.at("checkpoint").get<std::string>());
        if (s.contains("specs"))
            for (const auto& item : s.at("specs")) c.scen.specs.push_back(parse_scenario_spec(item));
    }
    return c;
}

}  // namespace steti::cli
