#include "steti/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "steti/csv.hpp"

namespace steti::scenario {

using data::MissionRecord;
using features::WindowedExample;

std::string to_string(Axis a) {
    switch (a) {
        case Axis::launch_mass: return "launch_mass";
        case Axis::country: return "country";
        case Axis::destination: return "destination";
        case Axis::contact_type: return "contact_type";
    }
    return "launch_mass";
}

Axis axis_from_string(const std::string& s) {
    if (s == "launch_mass") return Axis::launch_mass;
    if (s == "country") return Axis::country;
    if (s == "destination") return Axis::destination;
    if (s == "contact_type") return Axis::contact_type;
    throw ValidationError("unknown scenario axis '" + s + "'");
}

namespace {

std::vector<double> sweep_values(const ScenarioSpec& spec) {
    if (spec.count < 1) throw ValidationError("scenario sweep needs at least one point");
    if (!(spec.lo > 0.0) && spec.log_spacing)
        throw ValidationError("log-spaced sweep needs positive bounds");
    std::vector<double> out;
    if (spec.count == 1) {
        out.push_back(spec.lo);
        return out;
    }
    for (int i = 0; i < spec.count; ++i) {
        double t = static_cast<double>(i) / (spec.count - 1);
        out.push_back(spec.log_spacing ? spec.lo * std::pow(spec.hi / spec.lo, t)
                                       : spec.lo + (spec.hi - spec.lo) * t);
    }
    return out;
}

}  // namespace

std::vector<MissionRecord> build_scenarios(const ScenarioSpec& spec, const MissionRecord& baseline) {
    std::vector<MissionRecord> out;
    if (spec.axis == Axis::launch_mass) {
        for (double v : sweep_values(spec)) {
            MissionRecord r = baseline;
            r.launch_mass = v;
            out.push_back(std::move(r));
        }
    } else {
        if (spec.labels.empty()) throw ValidationError("categorical sweep needs labels");
        for (const auto& label : spec.labels) {
            MissionRecord r = baseline;
            (spec.axis == Axis::country      ? r.country
             : spec.axis == Axis::destination ? r.destination
                                              : r.contact_type) = label;
            out.push_back(std::move(r));
        }
    }
    return out;
}

ScenarioResult predict_scenarios(const ScenarioSpec& spec, const pipeline::ModelBundle& bundle,
                                 const std::vector<MissionRecord>& records,
                                 const std::vector<data::FundingSeries>& funding) {
    if (bundle.stage != pipeline::Stage::launch)
        throw ValidationError("scenario sweeps need a launch-time checkpoint");
    if (spec.axis != Axis::launch_mass && bundle.phase != pipeline::Phase::time_plus)
        throw ValidationError("axis '" + to_string(spec.axis) +
                              "' is not an input of a time-only checkpoint");
    if (spec.axis == Axis::launch_mass && bundle.phase != pipeline::Phase::time_plus)
        throw ValidationError("launch mass is not an input of a time-only checkpoint");

    // baseline record: named, or the latest launch in the dataset
    const MissionRecord* baseline = nullptr;
    for (const auto& r : records) {
        if (!spec.baseline.empty()) {
            if (r.name == spec.baseline) baseline = &r;
        } else if (!baseline || r.launch_date > baseline->launch_date) {
            baseline = &r;
        }
    }
    if (!baseline) throw ValidationError("baseline record '" + spec.baseline + "' not found");

    // featurize the baseline once; hypotheticals only swap the swept input
    auto all_examples = pipeline::build_examples(bundle, records, funding);
    const WindowedExample* found = nullptr;
    for (const auto& e : all_examples)
        if (e.owner == baseline->name) found = &e;
    if (!found)
        throw ValidationError("baseline '" + baseline->name +
                              "' has no full lookback window under this checkpoint");
    WindowedExample base_example = *found;

    auto hypotheticals = build_scenarios(spec, *baseline);
    std::vector<WindowedExample> batch;
    std::vector<ScenarioRow> rows;
    int mass_feature = -1;
    if (spec.axis == Axis::launch_mass) mass_feature = bundle.scalers.feature("launch_mass");

    bool baseline_in_sweep = false;
    for (const auto& hyp : hypotheticals) {
        WindowedExample e = base_example;
        ScenarioRow row;
        if (spec.axis == Axis::launch_mass) {
            e.mass_scaled = bundle.scalers.scale(mass_feature, hyp.launch_mass);
            row.axis_label = format_double(hyp.launch_mass);
            row.extrapolation = e.mass_scaled < 0.0 || e.mass_scaled > 1.0;
            if (hyp.launch_mass == baseline->launch_mass) {
                row.is_baseline = true;
                baseline_in_sweep = true;
            }
        } else {
            int slot = spec.axis == Axis::destination ? 0 : spec.axis == Axis::contact_type ? 1 : 2;
            const std::string& label = spec.axis == Axis::destination ? hyp.destination
                                       : spec.axis == Axis::contact_type ? hyp.contact_type
                                                                          : hyp.country;
            int index = bundle.vocabs[static_cast<std::size_t>(slot)].index(label);
            e.categoricals[static_cast<std::size_t>(slot)] = index;
            row.axis_label = label;
            row.extrapolation = index == 0;  // reserved slot for unseen labels
            const std::string& base_label = spec.axis == Axis::destination ? baseline->destination
                                            : spec.axis == Axis::contact_type ? baseline->contact_type
                                                                               : baseline->country;
            if (label == base_label) {
                row.is_baseline = true;
                baseline_in_sweep = true;
            }
        }
        batch.push_back(std::move(e));
        rows.push_back(std::move(row));
    }

    if (!baseline_in_sweep) {
        // prepend the untouched baseline
        batch.insert(batch.begin(), base_example);
        ScenarioRow row;
        row.axis_label = spec.axis == Axis::launch_mass ? format_double(baseline->launch_mass)
                         : spec.axis == Axis::destination ? baseline->destination
                         : spec.axis == Axis::contact_type ? baseline->contact_type
                                                            : baseline->country;
        row.is_baseline = true;
        rows.insert(rows.begin(), std::move(row));
    }

    Eigen::VectorXd pred = nn::predict(batch, bundle.params, bundle.config);
    ScenarioResult result;
    result.baseline_name = baseline->name;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].pred_log2 = pred(static_cast<long>(i));
        rows[i].pred_years = std::exp2(rows[i].pred_log2);
        result.rows.push_back(std::move(rows[i]));
    }
    return result;
}

void write_scenario_csv(const std::filesystem::path& path, const ScenarioResult& result) {
    csv::Writer w(path);
    w.row({"axis_value", "pred_log2_lifetime", "pred_lifetime_years", "extrapolation_flag"});
    for (const auto& row : result.rows)
        w.row({row.axis_label, format_double(row.pred_log2), format_double(row.pred_years),
               row.extrapolation ? "1" : "0"});
}

}  // namespace steti::scenario
