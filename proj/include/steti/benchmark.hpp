#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "steti/common.hpp"
#include "steti/dataset.hpp"

namespace steti::bench {

// Trailing mean of the series over years t-w+1..t.
double moving_average_feature(const data::FundingSeries& series, int window, int year);

Eigen::MatrixXd pearson_matrix(const std::vector<std::vector<double>>& columns);

struct RegressionModel {
    std::vector<std::string> column_names;  // first entry is the intercept
    Eigen::VectorXd coefficients;
    double residual_variance = 0.0;
};

// Ordinary least squares; X includes the intercept column.
RegressionModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::vector<std::string> names);

// VIF_j = 1 / (1 - R^2_j), regressing column j on the remaining columns plus
// an intercept. Returns +infinity for perfectly collinear columns. X here
// excludes the intercept.
std::vector<double> vif(const Eigen::MatrixXd& X);

inline constexpr double kVifInfinity = std::numeric_limits<double>::infinity();

// Contiguous chronological folds (rows must already be in time order); the
// mean of the k per-fold RMSEs.
double kfold_cv_rmse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k);

// The partially log-linear design: intercept, launch date, log2 mass,
// log2 of trailing moving averages of the chosen funding variables, and
// one-hot dummies with the most frequent level dropped per categorical.
struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;  // log2 lifetime
    std::vector<std::string> names;
    std::vector<int> continuous_columns;  // indices subject to the VIF gate
    std::vector<std::string> record_names;
    int dropped_records = 0;  // rows removed for non-finite features
};

Design build_design(const std::vector<data::MissionRecord>& records,
                    const std::vector<data::FundingSeries>& funding,
                    const std::vector<std::string>& funding_subset, int window);

double benchmark_predict(const RegressionModel& model, const data::MissionRecord& record,
                         const std::vector<data::FundingSeries>& funding,
                         const std::vector<std::string>& funding_subset, int window);

struct CandidateResult {
    int model_no = 0;
    std::vector<std::string> variables;
    double lowest_mean_rmse = 0.0;
    int best_window = 0;
    std::vector<std::pair<std::string, double>> vifs;  // at the best window
    bool vif_ok = false;
    bool usable = true;  // false when every window failed to fit
};

struct SearchResult {
    std::vector<CandidateResult> candidates;  // 15 rows, Table-7 ordering
    int selected = -1;
    int evaluations = 0;  // subsets x windows actually evaluated
    RegressionModel selected_model;
    int selected_window = 0;
    std::vector<std::string> selected_variables;
};

// Evaluates all 15 nonempty funding subsets across window sizes in
// [window_lo, window_hi]; picks the lowest mean CV RMSE among candidates whose
// continuous-regressor VIFs stay below the threshold.
SearchResult feature_search(const std::vector<data::MissionRecord>& records,
                            const std::vector<data::FundingSeries>& funding, int window_lo = 1,
                            int window_hi = 20, double vif_threshold = 5.0, int k = 5);

}  // namespace steti::bench
