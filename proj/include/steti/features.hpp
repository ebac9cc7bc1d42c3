#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "steti/common.hpp"

namespace steti::features {

// Min-max parameters in source units, fitted on the training partition only.
// A constant feature maps every value to 0.0 (flagged in `constant`).
struct ScalerParams {
    std::vector<std::string> names;
    std::vector<double> mins;
    std::vector<double> maxs;
    std::vector<bool> constant;

    int feature(const std::string& name) const;
    double scale(int f, double v) const;
    double unscale(int f, double v) const;
};

ScalerParams fit_scaler(const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& columns);

inline double log2_target(double lifetime) {
    if (!(lifetime > 0.0)) throw ValidationError("lifetime must be positive for log2 target, got " +
                                                 format_double(lifetime));
    return std::log2(lifetime);
}

inline double inverse_log2_target(double log2_lifetime) { return std::exp2(log2_lifetime); }

// Stride-1 windows of length n; window j covers indices j..j+n-1.
template <typename T>
std::vector<std::vector<T>> make_windows(const std::vector<T>& sequence, int n) {
    const int N = static_cast<int>(sequence.size());
    if (n < 1) throw ValidationError("window size must be >= 1, got " + std::to_string(n));
    if (N < n)
        throw ValidationError("sequence of length " + std::to_string(N) +
                              " too short for window size " + std::to_string(n));
    std::vector<std::vector<T>> windows;
    windows.reserve(static_cast<std::size_t>(N - n + 1));
    for (int j = 0; j + n <= N; ++j)
        windows.emplace_back(sequence.begin() + j, sequence.begin() + j + n);
    return windows;
}

// Index 0 is reserved for labels unseen at fit time.
struct Vocabulary {
    std::vector<std::string> labels;  // sorted; labels[i] has index i + 1

    int index(const std::string& label) const;
    int size_with_reserved() const { return static_cast<int>(labels.size()) + 1; }
};

Vocabulary build_vocabulary(const std::vector<std::string>& values);

struct SplitSpec {
    double outer_ratio = 0.75;
    int n_train = 0;
    int n_val = 0;
    int n_test = 0;

    int total() const { return n_train + n_val + n_test; }
};

// Outer cut at floor(ratio*N) chronologically; the first part is cut again at
// floor(ratio*M) into train/validation.
SplitSpec time_split(int n_records, double outer_ratio);

enum class Partition { train, val, test };
Partition partition_of(const SplitSpec& split, int position);

// Centered moving average of width w, shrunk symmetrically where the full
// window would run past either end.
std::vector<double> moving_average(const std::vector<double>& series, int w);

// One model-ready training instance.
struct WindowedExample {
    Eigen::MatrixXd seq_main;     // window_size x d rows, chronological
    Eigen::MatrixXd seq_funding;  // window_size_funding x 4, empty in time-only
    std::array<int, 3> categoricals{0, 0, 0};  // destination, contact_type, country
    double mass_scaled = 0.0;
    double target = 0.0;  // log2 lifetime
    std::string owner;    // record identity
    Partition partition = Partition::train;
};

void export_examples_csv(const std::string& path, const std::vector<WindowedExample>& examples);

}  // namespace steti::features
