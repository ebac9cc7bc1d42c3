#include "steti/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "steti/trend.hpp"

namespace steti::pipeline {

using data::KeyDate;
using data::MissionRecord;
using data::Status;
using features::Partition;
using features::WindowedExample;
using json = nlohmann::json;

std::string to_string(Phase p) { return p == Phase::time_only ? "time_only" : "time_plus"; }
std::string to_string(Stage s) { return s == Stage::failure ? "failure" : "launch"; }

Phase phase_from_string(const std::string& s) {
    if (s == "time_only") return Phase::time_only;
    if (s == "time_plus") return Phase::time_plus;
    throw ValidationError("unknown phase '" + s + "' (expected time_only or time_plus)");
}

namespace {

const char* kFundingOrder[] = {"total_rd", "defense_rd", "space_rd", "nasa_budget"};

std::vector<const MissionRecord*> sorted_records(const std::vector<MissionRecord>& records,
                                                 KeyDate key, bool inactive_only) {
    std::vector<const MissionRecord*> out;
    for (const auto& r : records) {
        if (inactive_only && r.status != Status::inactive) continue;
        out.push_back(&r);
    }
    std::sort(out.begin(), out.end(), [&](const MissionRecord* a, const MissionRecord* b) {
        double ka = data::key_date(*a, key), kb = data::key_date(*b, key);
        if (ka != kb) return ka < kb;
        return a->name < b->name;  // deterministic tie-break
    });
    return out;
}

const data::FundingSeries& series_by_name(const std::vector<data::FundingSeries>& funding,
                                          const std::string& name) {
    for (const auto& s : funding)
        if (s.name == name) return s;
    throw ValidationError("funding series '" + name + "' not provided");
}

double clamped_rate(double rate) {
    if (rate >= 1.0) {
        std::fprintf(stderr, "warning: dropout rate %.3f clamped to 0.99\n", rate);
        return 0.99;
    }
    return rate;
}

nn::ModelConfig make_model_config(Stage stage, Phase phase, const HyperParams& hp, int hidden,
                                  const std::array<features::Vocabulary, 3>& vocabs) {
    nn::ModelConfig mc;
    mc.main_input_dim = stage == Stage::failure ? 2 : 1;
    mc.window_size = hp.window_size;
    mc.hidden_size = hidden;
    mc.bidirectional = hp.bidirectional;
    mc.lstm_activation = hp.lstm_activation;
    mc.output_activation = hp.output_activation;
    mc.dropout_rate = clamped_rate(hp.dropout_rate);
    mc.recurrent_dropout_rate = clamped_rate(hp.recurrent_dropout_rate);
    if (phase == Phase::time_plus) {
        mc.use_funding = true;
        mc.funding_input_dim = 4;
        mc.window_size_funding = hp.window_size_funding.value_or(5);
        mc.use_static = true;
        for (const auto& v : vocabs) mc.vocab_sizes.push_back(static_cast<int>(v.labels.size()));
    }
    return mc;
}

struct Featurizer {
    Stage stage;
    Phase phase;
    const features::ScalerParams* scalers;
    const std::array<features::Vocabulary, 3>* vocabs;
    const std::vector<data::FundingSeries>* funding;
    int window = 5;
    int window_funding = 5;

    Eigen::MatrixXd sequence_rows(const std::vector<const MissionRecord*>& seq, int end_pos) const {
        int d = stage == Stage::failure ? 2 : 1;
        Eigen::MatrixXd m(window, d);
        for (int j = 0; j < window; ++j) {
            const MissionRecord* r = seq[static_cast<std::size_t>(end_pos - window + 1 + j)];
            if (stage == Stage::failure) {
                m(j, 0) = scalers->scale(scalers->feature("failure_date"), *r->failure_date);
                m(j, 1) = scalers->scale(scalers->feature("lifetime"), *r->lifetime);
            } else {
                m(j, 0) = scalers->scale(scalers->feature("launch_date"), r->launch_date);
            }
        }
        return m;
    }

    Eigen::MatrixXd funding_rows(const MissionRecord& owner) const {
        int year = static_cast<int>(
            std::floor(data::key_date(owner, stage == Stage::failure ? KeyDate::failure : KeyDate::launch)));
        Eigen::MatrixXd m(window_funding, 4);
        for (int j = 0; j < window_funding; ++j) {
            int y = year - window_funding + 1 + j;
            for (int s = 0; s < 4; ++s) {
                const auto& series = series_by_name(*funding, kFundingOrder[s]);
                m(j, s) = scalers->scale(scalers->feature(kFundingOrder[s]), series.at(y));
            }
        }
        return m;
    }

    WindowedExample make(const std::vector<const MissionRecord*>& seq, int end_pos, double target) const {
        const MissionRecord& owner = *seq[static_cast<std::size_t>(end_pos)];
        WindowedExample e;
        e.owner = owner.name;
        e.target = target;
        e.seq_main = sequence_rows(seq, end_pos);
        if (phase == Phase::time_plus) {
            e.seq_funding = funding_rows(owner);
            e.categoricals = {(*vocabs)[0].index(owner.destination), (*vocabs)[1].index(owner.contact_type),
                              (*vocabs)[2].index(owner.country)};
            e.mass_scaled = scalers->scale(scalers->feature("launch_mass"), owner.launch_mass);
        }
        return e;
    }
};

features::ScalerParams fit_stage_scalers(Stage stage, Phase phase,
                                         const std::vector<const MissionRecord*>& train_owners,
                                         const std::vector<data::FundingSeries>& funding) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    auto add = [&](const std::string& name, auto getter) {
        names.push_back(name);
        std::vector<double> col;
        for (const auto* r : train_owners) col.push_back(getter(*r));
        columns.push_back(std::move(col));
    };
    if (stage == Stage::failure) {
        add("failure_date", [](const MissionRecord& r) { return *r.failure_date; });
        add("lifetime", [](const MissionRecord& r) { return *r.lifetime; });
    } else {
        add("launch_date", [](const MissionRecord& r) { return r.launch_date; });
    }
    if (phase == Phase::time_plus) {
        add("launch_mass", [](const MissionRecord& r) { return r.launch_mass; });
        // funding series are exogenous national statistics, scaled over their
        // full declared range rather than per-partition
        for (const char* name : kFundingOrder) {
            const auto& s = series_by_name(funding, name);
            names.push_back(name);
            std::vector<double> col;
            for (const auto& [year, v] : s.values) col.push_back(v);
            columns.push_back(std::move(col));
        }
    }
    return features::fit_scaler(names, columns);
}

}  // namespace

StageDataset build_stage_dataset(Stage stage, Phase phase, const std::vector<MissionRecord>& records,
                                 const std::vector<data::FundingSeries>& funding, const HyperParams& hp,
                                 double split_ratio,
                                 const std::map<std::string, double>* transfer_targets) {
    if (stage == Stage::launch && transfer_targets == nullptr)
        throw ValidationError("launch-stage training needs transferred targets");

    // windowing sequence: failed records in failure order, or every record in
    // launch order (active launches appear in lookback, never as targets)
    auto sequence = sorted_records(records, stage == Stage::failure ? KeyDate::failure : KeyDate::launch,
                                   stage == Stage::failure);

    // owner candidates: the records eligible to be training targets
    std::vector<int> owner_positions;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        const MissionRecord* r = sequence[i];
        if (r->status != Status::inactive) continue;
        if (stage == Stage::launch && !transfer_targets->count(r->name)) continue;
        owner_positions.push_back(static_cast<int>(i));
    }

    StageDataset ds;
    ds.split = features::time_split(static_cast<int>(owner_positions.size()), split_ratio);

    std::vector<const MissionRecord*> train_owners;
    for (int k = 0; k < ds.split.n_train; ++k)
        train_owners.push_back(
            sequence[static_cast<std::size_t>(owner_positions[static_cast<std::size_t>(k)])]);

    ds.scalers = fit_stage_scalers(stage, phase, train_owners, funding);
    if (phase == Phase::time_plus) {
        std::vector<std::string> dest, contact, country;
        for (const auto* r : train_owners) {
            dest.push_back(r->destination);
            contact.push_back(r->contact_type);
            country.push_back(r->country);
        }
        ds.vocabs = {features::build_vocabulary(dest), features::build_vocabulary(contact),
                     features::build_vocabulary(country)};
    }

    Featurizer fz{stage,          phase, &ds.scalers, &ds.vocabs, &funding, hp.window_size,
                  hp.window_size_funding.value_or(5)};

    for (std::size_t k = 0; k < owner_positions.size(); ++k) {
        int pos = owner_positions[k];
        if (pos < hp.window_size - 1) continue;  // no full lookback window yet
        const MissionRecord& owner = *sequence[static_cast<std::size_t>(pos)];
        double target = stage == Stage::failure ? features::log2_target(*owner.lifetime)
                                                : transfer_targets->at(owner.name);
        WindowedExample e = fz.make(sequence, pos, target);
        e.partition = features::partition_of(ds.split, static_cast<int>(k));
        switch (e.partition) {
            case Partition::train: ds.train.push_back(e); break;
            case Partition::val: ds.val.push_back(e); break;
            case Partition::test: ds.test.push_back(e); break;
        }
        ds.all_owners.push_back(std::move(e));
    }
    return ds;
}

namespace {

Eigen::VectorXd targets_of(const std::vector<WindowedExample>& examples) {
    Eigen::VectorXd t(static_cast<long>(examples.size()));
    for (std::size_t i = 0; i < examples.size(); ++i) t(static_cast<long>(i)) = examples[i].target;
    return t;
}

struct TrainedCell {
    ModelBundle bundle;
    double test_rmse = 0.0;
};

TrainedCell train_once(Stage stage, const PhaseConfig& cfg, const std::vector<MissionRecord>& records,
                       const std::vector<data::FundingSeries>& funding,
                       const std::map<std::string, double>* transfer, const HyperParams& hp, double ratio,
                       int batch, std::uint64_t seed) {
    StageDataset ds = build_stage_dataset(stage, cfg.phase, records, funding, hp, ratio, transfer);
    if (ds.train.empty() || ds.val.empty() || ds.test.empty())
        throw ValidationError("window size " + std::to_string(hp.window_size) +
                              " leaves an empty partition");
    nn::ModelConfig mc = make_model_config(stage, cfg.phase, hp, cfg.hidden_size, ds.vocabs);

    Rng init_rng = Rng(seed).split("init");
    nn::TrainConfig tc;
    tc.batch_size = batch;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.optimizer = hp.optimizer;
    tc.learning_rate = hp.learning_rate;
    tc.seed = Rng(seed).split("train").next_u64();

    auto trained = nn::train(mc, ds.train, ds.val, nn::init_params(mc, init_rng), tc);

    Eigen::VectorXd pred = nn::predict(ds.test, trained.best_params, mc);
    double rmse = std::sqrt(nn::mse(targets_of(ds.test), pred));

    TrainedCell out;
    out.test_rmse = rmse;
    out.bundle.phase = cfg.phase;
    out.bundle.stage = stage;
    out.bundle.hyperparams = hp;
    out.bundle.split_ratio = ratio;
    out.bundle.batch_size = batch;
    out.bundle.hidden_size = cfg.hidden_size;
    out.bundle.config = mc;
    out.bundle.params = std::move(trained.best_params);
    out.bundle.scalers = ds.scalers;
    out.bundle.vocabs = ds.vocabs;
    return out;
}

std::uint64_t cell_seed(const PhaseConfig& cfg, Stage stage, bool tuned, double ratio, int batch,
                        const std::string& what) {
    std::string label = to_string(cfg.phase) + "/" + to_string(stage) + "/" +
                        (tuned ? "tuned" : "default") + "/" + format_double(ratio) + "/" +
                        std::to_string(batch) + "/" + what;
    return Rng(cfg.seed).split(label).next_u64();
}

CellResult evaluate_cell(Stage stage, const PhaseConfig& cfg, const std::vector<MissionRecord>& records,
                         const std::vector<data::FundingSeries>& funding,
                         const std::map<std::string, double>* transfer, bool tuned, double ratio,
                         int batch) {
    CellResult cell;
    cell.tuned = tuned;
    cell.split_ratio = ratio;
    cell.batch_size = batch;
    const bool time_plus = cfg.phase == Phase::time_plus;

    if (!tuned) {
        cell.hyperparams = default_hyperparams(time_plus);
        std::uint64_t seed = cell_seed(cfg, stage, tuned, ratio, batch, "train");
        TrainedCell trained =
            train_once(stage, cfg, records, funding, transfer, cell.hyperparams, ratio, batch, seed);
        trained.bundle.tuned = false;
        cell.test_rmse = trained.test_rmse;
        cell.bundle = std::move(trained.bundle);
        return cell;
    }

    tune::SearchSpace space;
    space.time_plus = time_plus;
    auto objective = [&](const HyperParams& hp, std::uint64_t trial_seed) {
        return train_once(stage, cfg, records, funding, transfer, hp, ratio, batch, trial_seed).test_rmse;
    };
    std::uint64_t study_seed = cell_seed(cfg, stage, tuned, ratio, batch, "study");
    auto study = tune::run_study(objective, space, cfg.tune_max_trials, study_seed);
    cell.tune_ledger = study.ledger;
    cell.hyperparams = study.best.params;
    TrainedCell trained = train_once(stage, cfg, records, funding, transfer, study.best.params, ratio,
                                     batch, study.best.seed);
    trained.bundle.tuned = true;
    cell.test_rmse = trained.test_rmse;
    cell.bundle = std::move(trained.bundle);
    return cell;
}

}  // namespace

std::pair<ModelBundle, double> train_single_cell(Stage stage, const PhaseConfig& cfg,
                                                 const std::vector<MissionRecord>& records,
                                                 const std::vector<data::FundingSeries>& funding,
                                                 const std::map<std::string, double>* transfer_targets,
                                                 const HyperParams& hp, double split_ratio,
                                                 int batch_size, std::uint64_t seed) {
    TrainedCell cell =
        train_once(stage, cfg, records, funding, transfer_targets, hp, split_ratio, batch_size, seed);
    return {std::move(cell.bundle), cell.test_rmse};
}

std::vector<WindowedExample> build_examples(const ModelBundle& bundle,
                                            const std::vector<MissionRecord>& records,
                                            const std::vector<data::FundingSeries>& funding) {
    auto sequence = sorted_records(
        records, bundle.stage == Stage::failure ? KeyDate::failure : KeyDate::launch,
        bundle.stage == Stage::failure);
    Featurizer fz{bundle.stage,
                  bundle.phase,
                  &bundle.scalers,
                  &bundle.vocabs,
                  &funding,
                  bundle.hyperparams.window_size,
                  bundle.hyperparams.window_size_funding.value_or(5)};
    std::vector<WindowedExample> examples;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        if (static_cast<int>(i) < bundle.hyperparams.window_size - 1) continue;
        examples.push_back(fz.make(sequence, static_cast<int>(i), 0.0));
    }
    return examples;
}

std::map<std::string, double> predict_records(const ModelBundle& bundle,
                                              const std::vector<MissionRecord>& records,
                                              const std::vector<data::FundingSeries>& funding) {
    auto examples = build_examples(bundle, records, funding);
    std::map<std::string, double> out;
    if (examples.empty()) return out;
    Eigen::VectorXd pred = nn::predict(examples, bundle.params, bundle.config);
    for (std::size_t i = 0; i < examples.size(); ++i)
        out[examples[i].owner] = pred(static_cast<long>(i));
    return out;
}

StageResult run_stage(Stage stage, const PhaseConfig& cfg, const std::vector<MissionRecord>& records,
                      const std::vector<data::FundingSeries>& funding,
                      const std::map<std::string, double>* transfer_targets) {
    StageResult result;
    result.stage = stage;

    struct CellSpec {
        bool tuned;
        double ratio;
        int batch;
    };
    std::vector<CellSpec> specs;
    std::vector<bool> settings = cfg.tuning ? std::vector<bool>{true, false} : std::vector<bool>{false};
    for (bool tuned : settings)
        for (double ratio : cfg.split_ratios)
            for (int batch : cfg.batch_sizes) specs.push_back({tuned, ratio, batch});
    if (specs.empty()) throw ValidationError("phase config has no grid cells");

    result.cells.resize(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    parallel_for(static_cast<int>(specs.size()), cfg.jobs, [&](int i) {
        try {
            const auto& s = specs[static_cast<std::size_t>(i)];
            result.cells[static_cast<std::size_t>(i)] =
                evaluate_cell(stage, cfg, records, funding, transfer_targets, s.tuned, s.ratio, s.batch);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    });
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        if (result.best_index < 0 ||
            result.cells[i].test_rmse <
                result.cells[static_cast<std::size_t>(result.best_index)].test_rmse)
            result.best_index = static_cast<int>(i);  // ties keep the earlier cell
    }

    // predictions from the selected model; for the failure stage these become
    // the stage-2 training targets, restricted to failed records
    auto preds = predict_records(result.best().bundle, records, funding);
    if (stage == Stage::failure) {
        for (const auto& r : records)
            if (r.status == Status::inactive && preds.count(r.name))
                result.predictions[r.name] = preds.at(r.name);
    } else {
        result.predictions = std::move(preds);
    }
    return result;
}

PhaseReport run_phase(const PhaseConfig& cfg, const std::vector<MissionRecord>& records,
                      const std::vector<data::FundingSeries>& funding) {
    PhaseReport report;
    report.phase = cfg.phase;
    report.stage1 = run_stage(Stage::failure, cfg, records, funding, nullptr);
    // hard ordering barrier: stage 2 trains on the selected stage-1 outputs
    report.stage2 = run_stage(Stage::launch, cfg, records, funding, &report.stage1.predictions);
    return report;
}

ComparisonReport compare_models(const ModelBundle& a, const ModelBundle& b,
                                const std::vector<MissionRecord>& records,
                                const std::vector<data::FundingSeries>& funding) {
    auto pred_a = predict_records(a, records, funding);
    auto pred_b = predict_records(b, records, funding);

    // shared held-out suffix: the stricter of the two test fractions over the
    // launch-ordered inactive records, so both models are scored on records
    // neither was fitted to
    auto inactive = sorted_records(records, KeyDate::launch, true);
    double ratio = std::max(a.split_ratio, b.split_ratio);
    auto split = features::time_split(static_cast<int>(inactive.size()), ratio);
    std::vector<double> ya, yb, actual;
    for (std::size_t i = static_cast<std::size_t>(split.n_train + split.n_val); i < inactive.size(); ++i) {
        const auto* r = inactive[i];
        auto ita = pred_a.find(r->name);
        auto itb = pred_b.find(r->name);
        if (ita == pred_a.end() || itb == pred_b.end()) continue;
        ya.push_back(ita->second);
        yb.push_back(itb->second);
        actual.push_back(features::log2_target(*r->lifetime));
    }
    if (actual.empty()) throw ValidationError("model comparison: no shared held-out records");
    ComparisonReport rep;
    rep.n_records = static_cast<int>(actual.size());
    rep.rmse_a = trend::rmse(actual, ya);
    rep.rmse_b = trend::rmse(actual, yb);
    rep.winner = rep.rmse_a <= rep.rmse_b ? 0 : 1;
    return rep;
}

// --- checkpoint serialization -------------------------------------------------

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw ValidationError("checkpoint: malformed matrix");
    Eigen::MatrixXd m(j.size(), j.front().size());
    for (std::size_t r = 0; r < j.size(); ++r)
        for (std::size_t c = 0; c < j[r].size(); ++c)
            m(static_cast<long>(r), static_cast<long>(c)) = j[r][c];
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (long i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<long>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<long>(i)) = j[i];
    return v;
}

json lstm_to_json(const nn::LstmParams& p) {
    return json{{"Wf", matrix_to_json(p.Wf)}, {"Wi", matrix_to_json(p.Wi)},
                {"Wc", matrix_to_json(p.Wc)}, {"Wo", matrix_to_json(p.Wo)},
                {"bf", vector_to_json(p.bf)}, {"bi", vector_to_json(p.bi)},
                {"bc", vector_to_json(p.bc)}, {"bo", vector_to_json(p.bo)}};
}

nn::LstmParams lstm_from_json(const json& j) {
    nn::LstmParams p;
    p.Wf = matrix_from_json(j.at("Wf"));
    p.Wi = matrix_from_json(j.at("Wi"));
    p.Wc = matrix_from_json(j.at("Wc"));
    p.Wo = matrix_from_json(j.at("Wo"));
    p.bf = vector_from_json(j.at("bf"));
    p.bi = vector_from_json(j.at("bi"));
    p.bc = vector_from_json(j.at("bc"));
    p.bo = vector_from_json(j.at("bo"));
    return p;
}

json branch_to_json(const nn::LstmBranch& b) {
    json j{{"fwd", lstm_to_json(b.fwd)},
           {"dense", json{{"W", matrix_to_json(b.dense.W)}, {"b", vector_to_json(b.dense.b)}}}};
    if (b.bwd) j["bwd"] = lstm_to_json(*b.bwd);
    return j;
}

nn::LstmBranch branch_from_json(const json& j) {
    nn::LstmBranch b;
    b.fwd = lstm_from_json(j.at("fwd"));
    if (j.contains("bwd")) b.bwd = lstm_from_json(j.at("bwd"));
    b.dense.W = matrix_from_json(j.at("dense").at("W"));
    b.dense.b = vector_from_json(j.at("dense").at("b"));
    return b;
}

json hyperparams_to_json(const HyperParams& hp) {
    json j{{"learning_rate", hp.learning_rate},
           {"optimizer", steti::to_string(hp.optimizer)},
           {"dropout_rate", hp.dropout_rate},
           {"recurrent_dropout_rate", hp.recurrent_dropout_rate},
           {"lstm_activation", steti::to_string(hp.lstm_activation)},
           {"output_activation", steti::to_string(hp.output_activation)},
           {"bidirectional", hp.bidirectional},
           {"window_size", hp.window_size}};
    if (hp.window_size_funding) j["window_size_funding"] = *hp.window_size_funding;
    return j;
}

HyperParams hyperparams_from_json(const json& j) {
    HyperParams hp;
    hp.learning_rate = j.at("learning_rate");
    hp.optimizer = optimizer_from_string(j.at("optimizer"));
    hp.dropout_rate = j.at("dropout_rate");
    hp.recurrent_dropout_rate = j.at("recurrent_dropout_rate");
    hp.lstm_activation = activation_from_string(j.at("lstm_activation"));
    hp.output_activation = activation_from_string(j.at("output_activation"));
    hp.bidirectional = j.at("bidirectional");
    hp.window_size = j.at("window_size");
    if (j.contains("window_size_funding")) hp.window_size_funding = j.at("window_size_funding");
    return hp;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle) {
    json j;
    j["format"] = "steti-checkpoint";
    j["version"] = kCheckpointVersion;
    j["phase"] = to_string(bundle.phase);
    j["stage"] = to_string(bundle.stage);
    j["hyperparams"] = hyperparams_to_json(bundle.hyperparams);
    j["split_ratio"] = bundle.split_ratio;
    j["batch_size"] = bundle.batch_size;
    j["tuned"] = bundle.tuned;
    j["hidden_size"] = bundle.hidden_size;

    json scalers;
    scalers["names"] = bundle.scalers.names;
    scalers["mins"] = bundle.scalers.mins;
    scalers["maxs"] = bundle.scalers.maxs;
    json constants = json::array();
    for (bool c : bundle.scalers.constant) constants.push_back(c);
    scalers["constant"] = constants;
    j["scalers"] = scalers;

    j["vocabularies"] = json{{"destination", bundle.vocabs[0].labels},
                             {"contact_type", bundle.vocabs[1].labels},
                             {"country", bundle.vocabs[2].labels}};

    json params;
    params["main_branch"] = branch_to_json(bundle.params.main_branch);
    if (bundle.params.funding_branch)
        params["funding_branch"] = branch_to_json(*bundle.params.funding_branch);
    json embeddings = json::array();
    for (const auto& e : bundle.params.embeddings) embeddings.push_back(matrix_to_json(e.table));
    params["embeddings"] = embeddings;
    params["bn"] = json{{"gamma", vector_to_json(bundle.params.bn.gamma)},
                        {"beta", vector_to_json(bundle.params.bn.beta)},
                        {"running_mean", vector_to_json(bundle.params.bn.running_mean)},
                        {"running_var", vector_to_json(bundle.params.bn.running_var)}};
    params["output"] = json{{"W", matrix_to_json(bundle.params.output.W)},
                            {"b", vector_to_json(bundle.params.output.b)}};
    j["params"] = params;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write checkpoint: " + path.string());
    out << j.dump(1) << "\n";
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != "steti-checkpoint")
        throw ValidationError("checkpoint " + path.string() + " has an unknown format header");
    if (j.value("version", -1) != kCheckpointVersion)
        throw ValidationError("checkpoint " + path.string() + " has an unsupported version");

    ModelBundle b;
    b.phase = phase_from_string(j.at("phase"));
    b.stage = j.at("stage") == "failure" ? Stage::failure : Stage::launch;
    b.hyperparams = hyperparams_from_json(j.at("hyperparams"));
    b.split_ratio = j.at("split_ratio");
    b.batch_size = j.at("batch_size");
    b.tuned = j.at("tuned");
    b.hidden_size = j.at("hidden_size");

    const json& s = j.at("scalers");
    b.scalers.names = s.at("names").get<std::vector<std::string>>();
    b.scalers.mins = s.at("mins").get<std::vector<double>>();
    b.scalers.maxs = s.at("maxs").get<std::vector<double>>();
    for (const auto& c : s.at("constant")) b.scalers.constant.push_back(c.get<bool>());

    b.vocabs[0].labels = j.at("vocabularies").at("destination").get<std::vector<std::string>>();
    b.vocabs[1].labels = j.at("vocabularies").at("contact_type").get<std::vector<std::string>>();
    b.vocabs[2].labels = j.at("vocabularies").at("country").get<std::vector<std::string>>();

    b.config = make_model_config(b.stage, b.phase, b.hyperparams, b.hidden_size, b.vocabs);

    const json& p = j.at("params");
    b.params.main_branch = branch_from_json(p.at("main_branch"));
    if (p.contains("funding_branch")) b.params.funding_branch = branch_from_json(p.at("funding_branch"));
    for (const auto& e : p.at("embeddings")) b.params.embeddings.push_back({matrix_from_json(e)});
    b.params.bn.gamma = vector_from_json(p.at("bn").at("gamma"));
    b.params.bn.beta = vector_from_json(p.at("bn").at("beta"));
    b.params.bn.running_mean = vector_from_json(p.at("bn").at("running_mean"));
    b.params.bn.running_var = vector_from_json(p.at("bn").at("running_var"));
    b.params.output.W = matrix_from_json(p.at("output").at("W"));
    b.params.output.b = vector_from_json(p.at("output").at("b"));

    if (b.params.output.W.cols() != b.config.concat_width())
        throw ValidationError("checkpoint " + path.string() + " is internally inconsistent");
    return b;
}

}  // namespace steti::pipeline
