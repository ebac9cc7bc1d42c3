#include "steti/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "steti/benchmark.hpp"
#include "steti/csv.hpp"
#include "steti/trend.hpp"

namespace steti::cli {

using data::MissionRecord;
using data::Status;
using json = nlohmann::json;

namespace {

void ensure_output_dir(const RunConfig& config) {
    std::filesystem::create_directories(config.output_dir);
}

std::string batch_label(int b) { return b == 0 ? "full" : std::to_string(b); }

json hyperparams_json(const HyperParams& hp) {
    json j{{"learning_rate", hp.learning_rate},
           {"optimizer", to_string(hp.optimizer)},
           {"dropout_rate", hp.dropout_rate},
           {"recurrent_dropout_rate", hp.recurrent_dropout_rate},
           {"lstm_activation", to_string(hp.lstm_activation)},
           {"output_activation", to_string(hp.output_activation)},
           {"bidirectional", hp.bidirectional},
           {"window_size", hp.window_size}};
    if (hp.window_size_funding) j["window_size_funding"] = *hp.window_size_funding;
    return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << j.dump(1) << "\n";
}

}  // namespace

LoadedData load_data(const RunConfig& config) {
    LoadedData d;
    d.records = data::parse_missions(config.missions_path);
    if (d.records.empty()) throw ValidationError("mission file has no records");

    double latest = 0.0;
    for (const auto& r : d.records) {
        latest = std::max(latest, r.launch_date);
        if (r.failure_date) latest = std::max(latest, *r.failure_date);
    }
    d.observation_date = config.observation_date.value_or(latest);
    for (auto& r : d.records) r = data::derive_lifetime_status(r, d.observation_date);

    auto nominal = data::parse_funding(config.funding_path);
    auto deflator = data::parse_deflator(config.deflator_path, config.deflator_base_year);
    for (const auto& series : nominal) d.funding.push_back(data::deflate(series, deflator));
    return d;
}

int cmd_ingest(const RunConfig& config) {
    ensure_output_dir(config);
    LoadedData d = load_data(config);
    auto joined = data::join_funding(d.records, d.funding, data::KeyDate::launch);
    auto summary = data::summarize(joined);

    csv::Writer table(config.output_dir / "ingest_summary.csv");
    table.row({"attribute", "kind", "min_or_values", "max"});
    for (const auto& r : summary.numeric_ranges)
        table.row({r.attribute, "numeric", format_double(r.min), format_double(r.max)});
    for (const auto& [attribute, values] : summary.categorical_values) {
        std::string joined_values;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) joined_values += "; ";
            joined_values += values[i];
        }
        table.row({attribute, "categorical", joined_values, ""});
    }

    json j{{"records", summary.total},
           {"active", summary.active},
           {"inactive", summary.inactive},
           {"observation_date", d.observation_date}};
    for (const auto& r : summary.numeric_ranges) j["ranges"][r.attribute] = {r.min, r.max};
    for (const auto& [attribute, values] : summary.categorical_values)
        j["categories"][attribute] = values;
    write_json(config.output_dir / "ingest_summary.json", j);

    data::write_missions_csv(config.output_dir / "missions_validated.csv", d.records);

    std::cout << "ingested " << summary.total << " records (" << summary.inactive << " inactive, "
              << summary.active << " active), observation date " << format_double(d.observation_date)
              << "\n";
    return 0;
}

int cmd_steti_fit(const RunConfig& config) {
    ensure_output_dir(config);
    LoadedData d = load_data(config);

    std::vector<const MissionRecord*> failed;
    for (const auto& r : d.records)
        if (r.status == Status::inactive) failed.push_back(&r);
    std::sort(failed.begin(), failed.end(), [](const MissionRecord* a, const MissionRecord* b) {
        if (a->launch_date != b->launch_date) return a->launch_date < b->launch_date;
        return a->name < b->name;
    });
    if (failed.size() < 3) throw ValidationError("closed-form fit needs at least 3 completed records");

    std::vector<trend::FailurePoint> points;
    for (const auto* r : failed) points.push_back({*r->failure_date, *r->lifetime});
    trend::MooresLawParams fit = trend::fit_closed_form(points, config.trend.epoch);

    write_json(config.output_dir / "steti_fit.json",
               json{{"l_epoch", fit.l_epoch},
                    {"doubling_time", fit.d},
                    {"epoch", fit.epoch},
                    {"n_points", points.size()}});

    // sampled launch-time curve
    double lo = failed.front()->launch_date, hi = failed.back()->launch_date;
    for (const auto& r : d.records) {
        lo = std::min(lo, r.launch_date);
        hi = std::max(hi, r.launch_date);
    }
    csv::Writer curve(config.output_dir / "steti_launch_curve.csv");
    curve.row({"launch_date", "predicted_lifetime_years"});
    int n = std::max(2, config.trend.curve_samples);
    for (int i = 0; i < n; ++i) {
        double t = lo + (hi - lo) * i / (n - 1);
        curve.row({format_double(t), format_double(trend::launch_curve(t, fit))});
    }

    // censoring-bias diagnostic: observed lifetimes by launch date, their
    // centered moving average, and the corrected curve at the same dates
    std::vector<double> lifetimes;
    for (const auto* r : failed) lifetimes.push_back(*r->lifetime);
    auto smoothed = features::moving_average(lifetimes, config.trend.moving_average_window);
    csv::Writer diag(config.output_dir / "steti_bias_diagnostic.csv");
    diag.row({"name", "status", "launch_date", "observed_years", "smoothed_failed_lifetime",
              "corrected_curve"});
    for (std::size_t i = 0; i < failed.size(); ++i) {
        const auto* r = failed[i];
        diag.row({r->name, "inactive", format_double(r->launch_date), format_double(*r->lifetime),
                  format_double(smoothed[i]), format_double(trend::launch_curve(r->launch_date, fit))});
    }
    for (const auto& r : d.records) {
        if (r.status != Status::active) continue;
        diag.row({r.name, "active", format_double(r.launch_date), format_double(r.age.value_or(0.0)), "",
                  format_double(trend::launch_curve(r.launch_date, fit))});
    }

    std::cout << "fitted l_epoch=" << format_double(fit.l_epoch)
              << " doubling_time=" << format_double(fit.d) << " on " << points.size()
              << " completed records\n";
    return 0;
}

namespace {

void write_stage_grid(const std::filesystem::path& path, const RunConfig& config,
                      const pipeline::StageResult& stage) {
    csv::Writer w(path);
    std::vector<std::string> header{"setting", "split_ratio"};
    for (int b : config.phase.batch_sizes) header.push_back("batch_" + batch_label(b));
    w.row(header);
    std::vector<bool> settings =
        config.phase.tuning ? std::vector<bool>{true, false} : std::vector<bool>{false};
    std::size_t cell = 0;
    for (bool tuned : settings) {
        for (double ratio : config.phase.split_ratios) {
            std::vector<std::string> row{tuned ? "tuned" : "default", format_double(ratio)};
            for (std::size_t bi = 0; bi < config.phase.batch_sizes.size(); ++bi)
                row.push_back(format_double(stage.cells.at(cell + bi).test_rmse));
            cell += config.phase.batch_sizes.size();
            w.row(row);
        }
    }
}

json stage_summary(const pipeline::StageResult& stage, const std::string& checkpoint) {
    const auto& best = stage.best();
    return json{{"best",
                 json{{"setting", best.tuned ? "tuned" : "default"},
                      {"split_ratio", best.split_ratio},
                      {"batch_size", batch_label(best.batch_size)},
                      {"test_rmse", best.test_rmse},
                      {"hyperparams", hyperparams_json(best.hyperparams)}}},
                {"checkpoint", checkpoint}};
}

void run_one_phase(const RunConfig& config, const LoadedData& d, pipeline::Phase phase) {
    pipeline::PhaseConfig pc;
    pc.phase = phase;
    pc.split_ratios = config.phase.split_ratios;
    pc.batch_sizes = config.phase.batch_sizes;
    pc.tuning = config.phase.tuning;
    pc.tune_max_trials = config.phase.tune_max_trials;
    pc.max_epochs = config.phase.max_epochs;
    pc.patience = config.phase.patience;
    pc.hidden_size = config.phase.hidden_size;
    pc.seed = config.seed;
    pc.jobs = config.jobs;

    auto report = pipeline::run_phase(pc, d.records, d.funding);
    std::string tag = "phase_" + pipeline::to_string(phase);

    write_stage_grid(config.output_dir / (tag + "_stage1_rmse.csv"), config, report.stage1);
    write_stage_grid(config.output_dir / (tag + "_stage2_rmse.csv"), config, report.stage2);

    // summaries carry checkpoint file names, not absolute paths, so reports
    // stay byte-identical across output directories
    std::string ckpt1 = tag + "_stage1_best.json";
    std::string ckpt2 = tag + "_stage2_best.json";
    pipeline::save_checkpoint(config.output_dir / ckpt1, report.stage1.best().bundle);
    pipeline::save_checkpoint(config.output_dir / ckpt2, report.stage2.best().bundle);

    // transferred targets, exact values
    csv::Writer transfer(config.output_dir / (tag + "_transfer.csv"));
    transfer.row({"record", "stage1_pred_log2_lifetime"});
    for (const auto& [name, pred] : report.stage1.predictions)
        transfer.row({name, format_double(pred)});

    // deliverable predictions: lifetime by launch date for every record
    csv::Writer preds(config.output_dir / (tag + "_predictions.csv"));
    preds.row({"record", "status", "pred_log2_lifetime", "pred_lifetime_years", "actual_lifetime_years"});
    for (const auto& r : d.records) {
        auto it = report.stage2.predictions.find(r.name);
        if (it == report.stage2.predictions.end()) continue;
        preds.row({r.name, r.status == Status::active ? "active" : "inactive",
                   format_double(it->second), format_double(std::exp2(it->second)),
                   r.lifetime ? format_double(*r.lifetime) : ""});
    }

    if (config.phase.export_windows) {
        auto ds = pipeline::build_stage_dataset(pipeline::Stage::launch, phase, d.records, d.funding,
                                                report.stage2.best().hyperparams,
                                                report.stage2.best().split_ratio,
                                                &report.stage1.predictions);
        features::export_examples_csv((config.output_dir / (tag + "_stage2_windows.csv")).string(),
                                      ds.all_owners);
    }

    json summary{{"phase", pipeline::to_string(phase)},
                 {"seed", config.seed},
                 {"stage1", stage_summary(report.stage1, ckpt1)},
                 {"stage2", stage_summary(report.stage2, ckpt2)}};
    write_json(config.output_dir / (tag + "_summary.json"), summary);

    std::cout << tag << ": stage1 best rmse " << format_double(report.stage1.best().test_rmse)
              << ", stage2 best rmse " << format_double(report.stage2.best().test_rmse) << "\n";
}

}  // namespace

int cmd_train(const RunConfig& config) {
    ensure_output_dir(config);
    LoadedData d = load_data(config);
    for (auto phase : config.phase.phases) run_one_phase(config, d, phase);
    return 0;
}

int cmd_tune(const RunConfig& config) {
    ensure_output_dir(config);
    LoadedData d = load_data(config);

    pipeline::PhaseConfig pc;
    pc.phase = config.tune.phase;
    pc.max_epochs = config.tune.max_epochs;
    pc.patience = config.tune.patience;
    pc.hidden_size = config.tune.hidden_size;
    pc.seed = config.seed;

    // stage-2 tuning needs transferred targets; reuse observed lifetimes as
    // targets would silently reintroduce the censoring bias, so run a default
    // stage 1 first and transfer its predictions
    std::map<std::string, double> transfer;
    const std::map<std::string, double>* transfer_ptr = nullptr;
    if (config.tune.stage == pipeline::Stage::launch) {
        pipeline::PhaseConfig stage1_cfg = pc;
        stage1_cfg.split_ratios = {config.tune.split_ratio};
        stage1_cfg.batch_sizes = {config.tune.batch_size};
        auto stage1 = pipeline::run_stage(pipeline::Stage::failure, stage1_cfg, d.records, d.funding,
                                          nullptr);
        transfer = stage1.predictions;
        transfer_ptr = &transfer;
    }

    tune::SearchSpace space;
    space.time_plus = config.tune.phase == pipeline::Phase::time_plus;

    auto ledger_path = config.output_dir / "tune_ledger.csv";
    std::vector<tune::Trial> resume;
    if (config.tune.resume && std::filesystem::exists(ledger_path))
        resume = tune::read_ledger_csv(ledger_path);

    auto objective = [&](const HyperParams& hp, std::uint64_t trial_seed) {
        auto trained = pipeline::train_single_cell(config.tune.stage, pc, d.records, d.funding,
                                                   transfer_ptr, hp, config.tune.split_ratio,
                                                   config.tune.batch_size, trial_seed);
        return trained.second;
    };

    auto study = tune::run_study(objective, space, config.tune.max_trials, config.seed, resume,
                                 [&](const tune::Trial&) {});
    tune::write_ledger_csv(ledger_path, study.ledger, space.time_plus);

    // deterministic report: the ledger without wall-clock timing
    {
        csv::Writer report(config.output_dir / "tune_report.csv");
        report.row(tune::ledger_header(space.time_plus));
        for (const auto& t : study.ledger) report.row(tune::ledger_row(t, false));
    }
    write_json(config.output_dir / "tune_best.json",
               json{{"objective", study.best.objective},
                    {"trial_id", study.best.id},
                    {"phase", pipeline::to_string(config.tune.phase)},
                    {"stage", pipeline::to_string(config.tune.stage)},
                    {"split_ratio", config.tune.split_ratio},
                    {"batch_size", batch_label(config.tune.batch_size)},
                    {"hyperparams", hyperparams_json(study.best.params)}});

    std::cout << "tuned " << study.ledger.size() << " trials, best objective "
              << format_double(study.best.objective) << "\n";
    return 0;
}

int cmd_benchmark(const RunConfig& config) {
    ensure_output_dir(config);
    LoadedData d = load_data(config);

    std::vector<MissionRecord> in_range;
    for (const auto& r : d.records) {
        if (config.benchmark.year_lo && r.launch_date < *config.benchmark.year_lo) continue;
        if (config.benchmark.year_hi && r.launch_date > *config.benchmark.year_hi) continue;
        in_range.push_back(r);
    }

    auto search = bench::feature_search(in_range, d.funding, config.benchmark.window_lo,
                                        config.benchmark.window_hi, config.benchmark.vif_threshold,
                                        config.benchmark.k_folds);

    csv::Writer table(config.output_dir / "benchmark_candidates.csv");
    table.row({"model_no", "variables", "lowest_mean_rmse", "best_window"});
    for (const auto& c : search.candidates) {
        std::string vars;
        for (std::size_t i = 0; i < c.variables.size(); ++i) {
            if (i) vars += "; ";
            vars += c.variables[i];
        }
        table.row({std::to_string(c.model_no), vars,
                   c.usable ? format_double(c.lowest_mean_rmse) : "",
                   c.usable ? std::to_string(c.best_window) : ""});
    }

    const auto& sel = search.candidates.at(static_cast<std::size_t>(search.selected));
    csv::Writer viftable(config.output_dir / "benchmark_vif.csv");
    viftable.row({"variable", "vif"});
    viftable.row({"constant", "0.000"});
    for (const auto& [name, value] : sel.vifs)
        viftable.row({name, std::isfinite(value) ? format_double(value) : "inf"});

    json model_json{{"selected_model_no", sel.model_no},
                    {"variables", sel.variables},
                    {"window", search.selected_window},
                    {"mean_cv_rmse", sel.lowest_mean_rmse},
                    {"evaluations", search.evaluations}};
    for (std::size_t i = 0; i < search.selected_model.column_names.size(); ++i)
        model_json["coefficients"][search.selected_model.column_names[i]] =
            search.selected_model.coefficients(static_cast<long>(i));
    write_json(config.output_dir / "benchmark_model.json", model_json);

    // correlation matrix over the log-transformed feature set
    {
        std::vector<std::string> names{"launch_date", "log2_lifetime", "log2_launch_mass",
                                       "log2_total_rd", "log2_defense_rd", "log2_space_rd",
                                       "log2_nasa_budget"};
        std::vector<std::vector<double>> cols(names.size());
        for (const auto& r : in_range) {
            if (r.status != Status::inactive || !r.lifetime) continue;
            int year = static_cast<int>(std::floor(r.launch_date));
            double f[4];
            bool ok = true;
            const char* series_names[] = {"total_rd", "defense_rd", "space_rd", "nasa_budget"};
            for (int s = 0; s < 4; ++s) {
                double v = 0.0;
                for (const auto& fs : d.funding)
                    if (fs.name == series_names[s]) v = fs.at(year);
                if (!(v > 0.0)) ok = false;
                f[s] = v;
            }
            if (!ok) continue;
            cols[0].push_back(r.launch_date);
            cols[1].push_back(std::log2(*r.lifetime));
            cols[2].push_back(std::log2(r.launch_mass));
            for (int s = 0; s < 4; ++s) cols[static_cast<std::size_t>(3 + s)].push_back(std::log2(f[s]));
        }
        auto matrix = bench::pearson_matrix(cols);
        csv::Writer w(config.output_dir / "benchmark_correlations.csv");
        std::vector<std::string> header{"feature"};
        header.insert(header.end(), names.begin(), names.end());
        w.row(header);
        for (std::size_t i = 0; i < names.size(); ++i) {
            std::vector<std::string> row{names[i]};
            for (std::size_t k = 0; k < names.size(); ++k)
                row.push_back(format_double(matrix(static_cast<long>(i), static_cast<long>(k))));
            w.row(row);
        }
    }

    // head-to-head against a trained launch-time checkpoint on its held-out suffix
    if (config.benchmark.lstm_checkpoint) {
        auto bundle = pipeline::load_checkpoint(*config.benchmark.lstm_checkpoint);
        auto lstm_preds = pipeline::predict_records(bundle, d.records, d.funding);

        std::vector<const MissionRecord*> inactive;
        for (const auto& r : d.records)
            if (r.status == Status::inactive) inactive.push_back(&r);
        std::sort(inactive.begin(), inactive.end(), [](const MissionRecord* a, const MissionRecord* b) {
            if (a->launch_date != b->launch_date) return a->launch_date < b->launch_date;
            return a->name < b->name;
        });
        auto split = features::time_split(static_cast<int>(inactive.size()), bundle.split_ratio);
        std::vector<double> actual, lstm, benchmark;
        for (std::size_t i = static_cast<std::size_t>(split.n_train + split.n_val); i < inactive.size();
             ++i) {
            const auto* r = inactive[i];
            auto it = lstm_preds.find(r->name);
            if (it == lstm_preds.end()) continue;
            actual.push_back(std::log2(*r->lifetime));
            lstm.push_back(it->second);
            benchmark.push_back(bench::benchmark_predict(search.selected_model, *r, d.funding,
                                                         search.selected_variables,
                                                         search.selected_window));
        }
        if (actual.empty()) throw ValidationError("benchmark comparison: no shared held-out records");
        double lstm_rmse = trend::rmse(actual, lstm);
        double bench_rmse = trend::rmse(actual, benchmark);
        write_json(config.output_dir / "benchmark_comparison.json",
                   json{{"n_records", actual.size()},
                        {"rmse_lstm", lstm_rmse},
                        {"rmse_benchmark", bench_rmse},
                        {"winner", lstm_rmse <= bench_rmse ? "lstm" : "benchmark"}});
        std::cout << "comparison on " << actual.size() << " held-out records: lstm rmse "
                  << format_double(lstm_rmse) << ", benchmark rmse " << format_double(bench_rmse)
                  << "\n";
    }

    std::cout << "benchmark search: model " << sel.model_no << " wins (mean cv rmse "
              << format_double(sel.lowest_mean_rmse) << ", window " << search.selected_window << ")\n";
    return 0;
}

int cmd_scenario(const RunConfig& config) {
    ensure_output_dir(config);
    if (config.scen.checkpoint.empty())
        throw ValidationError("scenario command needs scenario.checkpoint in the config");
    LoadedData d = load_data(config);
    auto bundle = pipeline::load_checkpoint(config.scen.checkpoint);

    auto specs = config.scen.specs;
    if (specs.empty()) {
        scenario::ScenarioSpec mass;
        mass.axis = scenario::Axis::launch_mass;
        specs.push_back(mass);
    }
    for (auto& spec : specs) {
        if (spec.axis != scenario::Axis::launch_mass && spec.labels.empty()) {
            // default sweep: every label the checkpoint knows
            int slot = spec.axis == scenario::Axis::destination ? 0
                       : spec.axis == scenario::Axis::contact_type ? 1
                                                                    : 2;
            spec.labels = bundle.vocabs[static_cast<std::size_t>(slot)].labels;
        }
        auto result = scenario::predict_scenarios(spec, bundle, d.records, d.funding);
        auto path = config.output_dir / ("scenario_" + scenario::to_string(spec.axis) + ".csv");
        scenario::write_scenario_csv(path, result);
        std::cout << "scenario " << scenario::to_string(spec.axis) << ": " << result.rows.size()
                  << " rows (baseline " << result.baseline_name << ") -> " << path.string() << "\n";
    }
    return 0;
}

}  // namespace steti::cli
