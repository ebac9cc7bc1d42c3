#include "steti/features.hpp"

#include <algorithm>
#include <set>

#include "steti/csv.hpp"

namespace steti::features {

int ScalerParams::feature(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw ValidationError("scaler has no feature '" + name + "'");
}

double ScalerParams::scale(int f, double v) const {
    if (constant[static_cast<std::size_t>(f)]) return 0.0;
    return (v - mins[static_cast<std::size_t>(f)]) /
           (maxs[static_cast<std::size_t>(f)] - mins[static_cast<std::size_t>(f)]);
}

double ScalerParams::unscale(int f, double v) const {
    if (constant[static_cast<std::size_t>(f)]) return mins[static_cast<std::size_t>(f)];
    return mins[static_cast<std::size_t>(f)] +
           v * (maxs[static_cast<std::size_t>(f)] - mins[static_cast<std::size_t>(f)]);
}

ScalerParams fit_scaler(const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) throw ValidationError("scaler: names/columns size mismatch");
    ScalerParams p;
    p.names = names;
    for (std::size_t f = 0; f < columns.size(); ++f) {
        if (columns[f].empty()) throw ValidationError("scaler: feature '" + names[f] + "' fitted on no data");
        auto [lo, hi] = std::minmax_element(columns[f].begin(), columns[f].end());
        p.mins.push_back(*lo);
        p.maxs.push_back(*hi);
        p.constant.push_back(*lo == *hi);
    }
    return p;
}

int Vocabulary::index(const std::string& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it != labels.end() && *it == label) return static_cast<int>(it - labels.begin()) + 1;
    return 0;
}

Vocabulary build_vocabulary(const std::vector<std::string>& values) {
    std::set<std::string> unique(values.begin(), values.end());
    return Vocabulary{{unique.begin(), unique.end()}};
}

SplitSpec time_split(int n_records, double outer_ratio) {
    if (n_records < 3) throw ValidationError("cannot split " + std::to_string(n_records) + " records three ways");
    if (!(outer_ratio > 0.0 && outer_ratio < 1.0))
        throw ValidationError("split ratio must be in (0, 1), got " + format_double(outer_ratio));
    SplitSpec s;
    s.outer_ratio = outer_ratio;
    int first = static_cast<int>(std::floor(outer_ratio * n_records));
    s.n_test = n_records - first;
    s.n_train = static_cast<int>(std::floor(outer_ratio * first));
    s.n_val = first - s.n_train;
    if (s.n_train == 0 || s.n_val == 0 || s.n_test == 0)
        throw ValidationError("split of " + std::to_string(n_records) + " at ratio " +
                              format_double(outer_ratio) + " leaves an empty partition");
    return s;
}

Partition partition_of(const SplitSpec& split, int position) {
    if (position < split.n_train) return Partition::train;
    if (position < split.n_train + split.n_val) return Partition::val;
    return Partition::test;
}

std::vector<double> moving_average(const std::vector<double>& series, int w) {
    if (w < 1) throw ValidationError("moving average window must be >= 1");
    const int n = static_cast<int>(series.size());
    const int half = (w - 1) / 2;
    std::vector<double> out(series.size());
    for (int i = 0; i < n; ++i) {
        int k = std::min({half, i, n - 1 - i});
        double sum = 0.0;
        for (int j = i - k; j <= i + k; ++j) sum += series[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = sum / (2 * k + 1);
    }
    return out;
}

void export_examples_csv(const std::string& path, const std::vector<WindowedExample>& examples) {
    csv::Writer w(path);
    std::vector<std::string> header{"owner", "partition", "target", "mass_scaled",
                                    "cat_destination", "cat_contact_type", "cat_country"};
    int n_main = examples.empty() ? 0 : static_cast<int>(examples.front().seq_main.size());
    int n_fund = examples.empty() ? 0 : static_cast<int>(examples.front().seq_funding.size());
    for (int i = 0; i < n_main; ++i) header.push_back("main_" + std::to_string(i));
    for (int i = 0; i < n_fund; ++i) header.push_back("funding_" + std::to_string(i));
    w.row(header);
    auto part_name = [](Partition p) {
        switch (p) {
            case Partition::train: return "train";
            case Partition::val: return "val";
            default: return "test";
        }
    };
    for (const auto& e : examples) {
        std::vector<std::string> row{e.owner,
                                     part_name(e.partition),
                                     format_double(e.target),
                                     format_double(e.mass_scaled),
                                     std::to_string(e.categoricals[0]),
                                     std::to_string(e.categoricals[1]),
                                     std::to_string(e.categoricals[2])};
        // row-major walk so columns line up run to run
        for (int r = 0; r < e.seq_main.rows(); ++r)
            for (int c = 0; c < e.seq_main.cols(); ++c) row.push_back(format_double(e.seq_main(r, c)));
        for (int r = 0; r < e.seq_funding.rows(); ++r)
            for (int c = 0; c < e.seq_funding.cols(); ++c) row.push_back(format_double(e.seq_funding(r, c)));
        w.row(row);
    }
}

}  // namespace steti::features
