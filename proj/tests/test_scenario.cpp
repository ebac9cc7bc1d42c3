#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "steti/csv.hpp"
#include "steti/scenario.hpp"
#include "support/synthetic.hpp"

using namespace steti;
using namespace steti::scenario;
using data::MissionRecord;

namespace {

struct Trained {
    std::vector<MissionRecord> records;
    std::vector<data::FundingSeries> funding;
    pipeline::ModelBundle bundle;
};

// time-plus launch model trained on a cohort whose lifetimes carry no mass
// signal (constant lifetime), so mass sweeps should barely move predictions
Trained trained_constant_lifetime() {
    Trained t;
    Rng rng(31);
    for (int i = 0; i < 70; ++i) {
        MissionRecord r;
        r.name = "c-" + std::to_string(i);
        r.launch_date = 1960.0 + 0.8 * i;
        r.launch_mass = 10.0 + 4000.0 * rng.uniform();
        r.destination = i % 2 ? "Lunar" : "Mars";
        r.contact_type = i % 3 ? "Orbit" : "Flyby";
        r.country = i % 4 ? "US" : "Japan";
        r.lifetime = 4.0;  // log2 target constant at 2
        r.failure_date = r.launch_date + *r.lifetime;
        r.status = data::Status::inactive;
        t.records.push_back(std::move(r));
    }
    Rng frng(32);
    t.funding = testsupport::make_funding(1940, 2023, frng);

    pipeline::PhaseConfig pc;
    pc.phase = pipeline::Phase::time_plus;
    pc.max_epochs = 2000;
    pc.patience = 2000;
    pc.hidden_size = 6;
    pc.seed = 3;
    HyperParams hp = default_hyperparams(true);
    hp.learning_rate = 5e-3;
    std::map<std::string, double> transfer;
    for (const auto& r : t.records) transfer[r.name] = 2.0;  // log2 of the constant lifetime
    auto [bundle, rmse] = pipeline::train_single_cell(pipeline::Stage::launch, pc, t.records, t.funding,
                                                      &transfer, hp, 0.75, 0, 99);
    (void)rmse;
    t.bundle = std::move(bundle);
    return t;
}

}  // namespace

TEST_CASE("build_scenarios isolates the swept axis") {
    MissionRecord base;
    base.name = "base";
    base.launch_date = 2022.9;
    base.launch_mass = 1000.0;
    base.destination = "Lunar";
    base.contact_type = "Lander";
    base.country = "Japan";

    SUBCASE("mass axis spans the requested range in log steps") {
        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        spec.lo = 1.0;
        spec.hi = 50000.0;
        spec.count = 50;
        auto hyp = build_scenarios(spec, base);
        REQUIRE(hyp.size() == 50);
        CHECK(hyp.front().launch_mass == doctest::Approx(1.0));
        CHECK(hyp.back().launch_mass == doctest::Approx(50000.0));
        // log spacing: constant ratio between consecutive points
        double ratio = hyp[1].launch_mass / hyp[0].launch_mass;
        for (std::size_t i = 2; i < hyp.size(); ++i)
            CHECK(hyp[i].launch_mass / hyp[i - 1].launch_mass == doctest::Approx(ratio).epsilon(1e-9));
        for (const auto& h : hyp) {
            CHECK(h.launch_date == base.launch_date);
            CHECK(h.destination == base.destination);
            CHECK(h.contact_type == base.contact_type);
            CHECK(h.country == base.country);
            CHECK(h.name == base.name);
        }
    }
    SUBCASE("categorical axis changes only that label") {
        ScenarioSpec spec;
        spec.axis = Axis::country;
        spec.labels = {"US", "Japan", "Europe"};
        auto hyp = build_scenarios(spec, base);
        REQUIRE(hyp.size() == 3);
        for (const auto& h : hyp) {
            CHECK(h.launch_mass == base.launch_mass);
            CHECK(h.destination == base.destination);
        }
        CHECK(hyp[0].country == "US");
        CHECK(hyp[1].country == "Japan");
    }
    SUBCASE("sweep containing the baseline value reproduces it field for field") {
        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        spec.lo = base.launch_mass;
        spec.hi = base.launch_mass * 16.0;
        spec.count = 5;
        auto hyp = build_scenarios(spec, base);
        CHECK(hyp.front().launch_mass == base.launch_mass);
        CHECK(hyp.front().name == base.name);
        CHECK(hyp.front().country == base.country);
    }
}

TEST_CASE("scenario predictions against a trained checkpoint") {
    static Trained t = trained_constant_lifetime();

    SUBCASE("identity sweep reproduces the baseline prediction bitwise") {
        const MissionRecord* latest = nullptr;
        for (const auto& r : t.records)
            if (!latest || r.launch_date > latest->launch_date) latest = &r;

        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        spec.lo = latest->launch_mass;
        spec.hi = latest->launch_mass;
        spec.count = 1;
        auto result = predict_scenarios(spec, t.bundle, t.records, t.funding);
        REQUIRE(result.rows.size() == 1);  // baseline is part of the sweep
        CHECK(result.rows[0].is_baseline);

        auto preds = pipeline::predict_records(t.bundle, t.records, t.funding);
        CHECK(result.rows[0].pred_log2 == preds.at(latest->name));  // bitwise
    }

    SUBCASE("row cardinality: sweep size plus baseline when absent from the sweep") {
        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        spec.lo = 1.0;
        spec.hi = 50000.0;
        spec.count = 50;
        auto result = predict_scenarios(spec, t.bundle, t.records, t.funding);
        CHECK(result.rows.size() == 51);
        CHECK(result.rows.front().is_baseline);
    }

    SUBCASE("repeat runs are identical") {
        ScenarioSpec spec;
        spec.axis = Axis::country;
        auto labels = t.bundle.vocabs[2].labels;
        spec.labels = labels;
        auto a = predict_scenarios(spec, t.bundle, t.records, t.funding);
        auto b = predict_scenarios(spec, t.bundle, t.records, t.funding);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i)
            CHECK(a.rows[i].pred_log2 == b.rows[i].pred_log2);
    }

    SUBCASE("exp2 consistency and extrapolation flags on a wide mass sweep") {
        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        spec.lo = 1.0;
        spec.hi = 50000.0;
        spec.count = 25;
        auto result = predict_scenarios(spec, t.bundle, t.records, t.funding);
        bool any_extrapolated = false;
        for (const auto& row : result.rows) {
            CHECK(std::abs(row.pred_years - std::exp2(row.pred_log2)) <=
                  1e-12 * std::max(1.0, row.pred_years));
            any_extrapolated |= row.extrapolation;
        }
        CHECK(any_extrapolated);  // 50,000 kg exceeds the training range
    }

    SUBCASE("mass sweep barely moves a model trained without mass signal") {
        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        spec.lo = 10.0;
        spec.hi = 4000.0;  // inside the training range
        spec.count = 30;
        auto result = predict_scenarios(spec, t.bundle, t.records, t.funding);
        double lo = 1e18, hi = -1e18;
        for (const auto& row : result.rows) {
            lo = std::min(lo, row.pred_log2);
            hi = std::max(hi, row.pred_log2);
        }
        CHECK(hi - lo < 0.1);
    }

    SUBCASE("unseen category maps to the reserved slot and is flagged") {
        ScenarioSpec spec;
        spec.axis = Axis::country;
        spec.labels = {"Atlantis"};
        auto result = predict_scenarios(spec, t.bundle, t.records, t.funding);
        bool found = false;
        for (const auto& row : result.rows)
            if (row.axis_label == "Atlantis") {
                CHECK(row.extrapolation);
                found = true;
            }
        CHECK(found);
    }

    SUBCASE("axis checks against the checkpoint") {
        ScenarioSpec spec;
        spec.axis = Axis::launch_mass;
        pipeline::ModelBundle wrong_stage = t.bundle;
        wrong_stage.stage = pipeline::Stage::failure;
        CHECK_THROWS_AS(predict_scenarios(spec, wrong_stage, t.records, t.funding), ValidationError);

        spec.baseline = "no-such-record";
        CHECK_THROWS_AS(predict_scenarios(spec, t.bundle, t.records, t.funding), ValidationError);
    }
}

TEST_CASE("scenario csv export") {
    ScenarioResult result;
    result.baseline_name = "base";
    result.rows.push_back({"1000", 2.0, 4.0, false, true});
    result.rows.push_back({"2000", 1.5, std::exp2(1.5), true, false});
    auto path = std::filesystem::temp_directory_path() / "steti_scenario_test.csv";
    write_scenario_csv(path, result);
    auto table = csv::read_file(path);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.header ==
          std::vector<std::string>{"axis_value", "pred_log2_lifetime", "pred_lifetime_years",
                                   "extrapolation_flag"});
    CHECK(table.rows[1][3] == "1");
}
