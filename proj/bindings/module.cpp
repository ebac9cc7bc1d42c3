#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "steti/benchmark.hpp"
#include "steti/commands.hpp"
#include "steti/features.hpp"
#include "steti/hypertune.hpp"
#include "steti/pipeline.hpp"
#include "steti/trend.hpp"

namespace py = pybind11;
using namespace steti;

namespace {

py::dict hyperparams_to_dict(const HyperParams& hp) {
    py::dict d;
    d["learning_rate"] = hp.learning_rate;
    d["optimizer"] = to_string(hp.optimizer);
    d["dropout_rate"] = hp.dropout_rate;
    d["recurrent_dropout_rate"] = hp.recurrent_dropout_rate;
    d["lstm_activation"] = to_string(hp.lstm_activation);
    d["output_activation"] = to_string(hp.output_activation);
    d["bidirectional"] = hp.bidirectional;
    d["window_size"] = hp.window_size;
    if (hp.window_size_funding) d["window_size_funding"] = *hp.window_size_funding;
    return d;
}

Eigen::MatrixXd matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ValidationError("matrix must have at least one row");
    Eigen::MatrixXd X(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw ValidationError("ragged matrix rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            X(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    }
    return X;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Event-lifetime trend forecasting with right-censoring bias correction";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<RuntimeError>(m, "RuntimeError", PyExc_RuntimeError);

    // growth-curve operations
    m.def(
        "launch_curve",
        [](double t, double l_epoch, double d, double epoch) {
            return trend::launch_curve(t, {l_epoch, d, epoch});
        },
        py::arg("launch_time"), py::arg("l_epoch"), py::arg("doubling_time"),
        py::arg("epoch") = 1959.0,
        "Lifetime predicted for a launch date: l_epoch * 2**((t - epoch) / doubling_time).");
    m.def(
        "solve_failure_lifetime",
        [](double t, double l_epoch, double d, double epoch) {
            return trend::solve_failure_lifetime(t, {l_epoch, d, epoch});
        },
        py::arg("failure_time"), py::arg("l_epoch"), py::arg("doubling_time"),
        py::arg("epoch") = 1959.0,
        "Unique lifetime satisfying the implicit failure-time form of the growth curve.");
    m.def(
        "fit_closed_form",
        [](const std::vector<std::pair<double, double>>& points, double epoch) {
            std::vector<trend::FailurePoint> pts;
            for (auto [t, l] : points) pts.push_back({t, l});
            auto fit = trend::fit_closed_form(pts, epoch);
            py::dict out;
            out["l_epoch"] = fit.l_epoch;
            out["doubling_time"] = fit.d;
            out["epoch"] = fit.epoch;
            return out;
        },
        py::arg("failure_points"), py::arg("epoch") = 1959.0,
        "Least-squares fit of (l_epoch, doubling_time) to (failure_time, lifetime) pairs;\n"
        "fitting against failure times sidesteps the right-censoring bias of launch-date fits.");
    m.def(
        "naive_launch_fit",
        [](const std::vector<std::pair<double, double>>& points) {
            std::vector<trend::FailurePoint> pts;
            for (auto [t, l] : points) pts.push_back({t, l});
            return trend::naive_launch_fit(pts);
        },
        py::arg("failure_points"),
        "OLS of log2(lifetime) on launch date over failed records only (biased under censoring).");

    // metrics and feature plumbing
    m.def("mse", &trend::mse, py::arg("y"), py::arg("y_hat"));
    m.def("rmse", &trend::rmse, py::arg("y"), py::arg("y_hat"));
    m.def("log2_target", &features::log2_target, py::arg("lifetime"));
    m.def("inverse_log2_target", &features::inverse_log2_target, py::arg("log2_lifetime"));
    m.def(
        "make_windows",
        [](const std::vector<double>& seq, int n) { return features::make_windows(seq, n); },
        py::arg("sequence"), py::arg("window_size"),
        "Stride-1 sliding windows; returns len(sequence) - window_size + 1 windows.");
    m.def(
        "time_split",
        [](int n, double ratio) {
            auto s = features::time_split(n, ratio);
            return py::make_tuple(s.n_train, s.n_val, s.n_test);
        },
        py::arg("n_records"), py::arg("outer_ratio"),
        "Chronological train/validation/test sizes under the floor rule.");
    m.def("moving_average", &features::moving_average, py::arg("series"), py::arg("window"),
          "Centered moving average, shrunk symmetrically at the ends.");

    // regression benchmark operations
    m.def(
        "ols_fit",
        [](const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
            Eigen::VectorXd yv(static_cast<long>(y.size()));
            for (std::size_t i = 0; i < y.size(); ++i) yv(static_cast<long>(i)) = y[i];
            auto model = bench::ols_fit(matrix_from_rows(X), yv, {});
            return std::vector<double>(model.coefficients.data(),
                                       model.coefficients.data() + model.coefficients.size());
        },
        py::arg("X"), py::arg("y"), "Ordinary least squares coefficients (X includes any intercept).");
    m.def(
        "vif",
        [](const std::vector<std::vector<double>>& X) { return bench::vif(matrix_from_rows(X)); },
        py::arg("X"), "Variance inflation factors; inf marks perfect collinearity.");
    m.def(
        "pearson_matrix",
        [](const std::vector<std::vector<double>>& columns) {
            auto m2 = bench::pearson_matrix(columns);
            std::vector<std::vector<double>> out;
            for (long r = 0; r < m2.rows(); ++r)
                out.emplace_back(m2.row(r).data(), m2.row(r).data() + m2.cols());
            return out;
        },
        py::arg("columns"));

    // hyperparameter search
    m.def(
        "tune_study",
        [](const py::function& objective, int max_trials, std::uint64_t seed, bool time_plus) {
            tune::SearchSpace space;
            space.time_plus = time_plus;
            auto result = tune::run_study(
                [&](const HyperParams& hp, std::uint64_t trial_seed) {
                    return objective(hyperparams_to_dict(hp), trial_seed).cast<double>();
                },
                space, max_trials, seed);
            py::dict out;
            out["best_objective"] = result.best.objective;
            out["best_params"] = hyperparams_to_dict(result.best.params);
            py::list ledger;
            for (const auto& t : result.ledger) {
                py::dict row;
                row["trial_id"] = t.id;
                row["params"] = hyperparams_to_dict(t.params);
                row["objective"] = t.ok ? py::cast(t.objective) : py::none();
                row["status"] = t.ok ? "ok" : "failed";
                ledger.append(std::move(row));
            }
            out["ledger"] = std::move(ledger);
            return out;
        },
        py::arg("objective"), py::arg("max_trials") = 100, py::arg("seed") = 0,
        py::arg("time_plus") = false,
        "Sequential model-based search over the nine-knob space; the objective\n"
        "receives (params_dict, trial_seed) and returns the loss to minimize.");

    // end-to-end prediction from a saved checkpoint
    m.def(
        "predict_from_checkpoint",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& missions,
           const std::filesystem::path& funding, const std::filesystem::path& deflator,
           std::optional<double> observation_date) {
            cli::RunConfig cfg;
            cfg.missions_path = missions;
            cfg.funding_path = funding;
            cfg.deflator_path = deflator;
            cfg.observation_date = observation_date;
            auto data = cli::load_data(cfg);
            auto bundle = pipeline::load_checkpoint(checkpoint);
            return pipeline::predict_records(bundle, data.records, data.funding);
        },
        py::arg("checkpoint"), py::arg("missions_csv"), py::arg("funding_csv"),
        py::arg("deflator_csv"), py::arg("observation_date") = py::none(),
        "Predicted log2 lifetime per record, keyed by record name.");
}
