#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "steti/common.hpp"
#include "steti/hyperparams.hpp"

namespace steti::tune {

// The nine-knob search space. time_plus adds window_size_funding.
struct SearchSpace {
    bool time_plus = false;

    static constexpr double kLogLrLow = -6.0;  // log10 of 1e-6
    static constexpr double kLogLrHigh = -2.0;
    static constexpr int kWindowLow = 1;
    static constexpr int kWindowHigh = 10;
};

struct Trial {
    int id = 0;
    HyperParams params;
    double objective = 0.0;
    bool ok = false;
    std::uint64_t seed = 0;
    double seconds = 0.0;
};

// Tree-structured Parzen Estimator proposal: with fewer than kStartupTrials
// completed trials this draws from the prior; afterwards it splits history at
// the kGamma quantile, models good/bad densities per dimension, draws
// kCandidates from the good density and keeps the candidate maximizing the
// good/bad likelihood ratio.
inline constexpr double kGamma = 0.25;
inline constexpr int kCandidates = 24;
inline constexpr int kStartupTrials = 10;

HyperParams sample(const SearchSpace& space, const std::vector<Trial>& history, Rng& rng);

bool in_domain(const SearchSpace& space, const HyperParams& hp);

using Objective = std::function<double(const HyperParams& hp, std::uint64_t trial_seed)>;

struct StudyResult {
    Trial best;
    std::vector<Trial> ledger;
};

// Sequential optimization loop. A throwing objective marks the trial failed;
// failed trials stay in the ledger but never win. `resume` trials count
// toward max_trials, so an interrupted study continues where it stopped.
StudyResult run_study(const Objective& objective, const SearchSpace& space, int max_trials,
                      std::uint64_t seed, std::vector<Trial> resume = {},
                      const std::function<void(const Trial&)>& on_trial = nullptr);

std::vector<std::string> ledger_header(bool time_plus);
std::vector<std::string> ledger_row(const Trial& t, bool with_seconds = true);
void write_ledger_csv(const std::filesystem::path& path, const std::vector<Trial>& ledger, bool time_plus);
std::vector<Trial> read_ledger_csv(const std::filesystem::path& path);

}  // namespace steti::tune
